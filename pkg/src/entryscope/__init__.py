"""entryscope: airline route networks, entry-threat detection, and
two-way fixed-effects event-study estimation.

The package splits into ingest (ticket/segment filtering and merging),
netgraph (network measures), threatscan (presence states, threatened routes,
panel assembly), panelfit (weighted estimation with robust or clustered
covariances), synthgen (fixtures, synthetic data, brute-force oracles), and
report/cli (tables, figure data, orchestration).
"""

from .quarters import Quarter, quarter_range

__version__ = "0.1.0"

__all__ = ["Quarter", "quarter_range", "__version__"]
