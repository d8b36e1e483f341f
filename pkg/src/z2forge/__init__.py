"""z2forge: Z2 lattice gauge theories with bosonic matter on trapped ions.

Subpackages
-----------
hilbert   truncated-Fock / qubit Hilbert-space kernel
gauge     ideal gauge-invariant Hamiltonians, Gauss law, canonical states
hardware  realistic laser-ion Hamiltonians, pulses, Sr-88 presets
evolve    state-vector propagation and figure-level metrics
oracles   closed-form references (Rabi, Lambda, Wannier-Stark, Bessel)
mps       matrix-product states and one-site TDVP for long chains
cli       scenario runner (``z2forge run --scenario ...``)
"""

__version__ = "0.1.0"
