"""moebius-lab: desk-scale experiments on Mobius averages, polynomial-phase
equidistribution, pretentious distances, and rigid dynamical systems."""

__version__ = "0.1.0"
