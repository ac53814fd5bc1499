"""camscat: fixed-angular-momentum scattering for nonlocal potentials.

Fredholm-Smithies determinants on a weighted radial Hilbert space,
complex-angular-momentum continuation of the partial amplitude, Regge
pole location and tracing, and Watson resummation of the partial-wave
series, with the supporting special-function bounds turned into
executable certificates.
"""

from camscat.space import SpaceParams, RadialGrid, Kernel, build_grid

__version__ = "0.1.0"

__all__ = ["SpaceParams", "RadialGrid", "Kernel", "build_grid", "__version__"]
