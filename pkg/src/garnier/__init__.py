"""Maximal surfaces in Minkowski 3-space bounded by polygonal lines.

The surfaces are built from a real Fuchsian system whose monodromy is
generated by the half-turns about the edge directions:

* ``lorentz``: Minkowski geometry and the spin group ``SU(1,1)``.
* ``polygon``: direction tuples, exterior angles, polygons.
* ``fuchsian``: Fuchsian systems, residue conditions, local series.
* ``monodromy``: continuation, monodromy, the Riemann-Hilbert solver.
* ``schlesinger``: isomonodromic deformation.
* ``weierstrass``: spinor Weierstrass data, surface checks, meshes.
* ``ratio``: edge lengths, the length-ratio map, the Plateau solver.
* ``cli``: command-line front end.
"""

__version__ = "0.1.0"
