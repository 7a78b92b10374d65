"""Semi-on-demand hybrid-route transit planning and simulation toolkit.

Subpackages and modules:

* :mod:`sodsim.network` - street graph, shortest paths, walking distances
* :mod:`sodsim.planning` - peak-hour vehicle size / headway / fleet optimization
* :mod:`sodsim.detour` - stochastic detour budgets and hybrid-route schedules
* :mod:`sodsim.demand` - seeded rider request generation
* :mod:`sodsim.sim` - agent simulation with insertion-based dispatch
* :mod:`sodsim.metrics` - generalized-cost analysis and replication aggregation
* :mod:`sodsim.cli` - scenario-driven command line front end
"""

__version__ = "0.1.0"
