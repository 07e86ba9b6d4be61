"""Generalized conditional displacements on a truncated oscillator.

Submodules: ``linalg`` (dense substrate), ``oscillator`` (Fock space,
displacements, Wigner), ``qudit`` (Weyl operators), ``gcd`` (CD_d, cat
states, Knill-Laflamme), ``gkp`` (sharpen-trim stabilization), ``noise``
(loss and dephasing), ``encodings`` (rotor, beam-splitter and spin CDs),
``experiments`` and ``cli`` (batch runner).
"""

__version__ = "0.1.0"
