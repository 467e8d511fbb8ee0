"""Surface codes on high-genus square lattices.

Builds closed square-lattice surfaces with many handles, extracts the CSS
code carried by their cellular homology, measures curvature-driven circle
growth, and runs matching-decoder Monte Carlo to probe how the handle
geometry moves the effective threshold.
"""

__version__ = "0.1.0"
