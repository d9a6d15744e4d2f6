from core.performance import perf_tracker
from core.lattice import StripLattice, build_strip
from core.tjoin import min_tjoin
from core.groundstate import cgroundstate

__all__ = ['perf_tracker', 'StripLattice', 'build_strip', 'min_tjoin', 'cgroundstate']
