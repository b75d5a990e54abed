"""Test suite for expanderlab.

This package contains tests for all modules:
- test_numerics_core: Grids, quadrature, banded solves and damped Newton
- test_expander_ode: Radial self-expanders, barriers and asymptotics
- test_graph_solver: Disk Dirichlet problem and latitude bands
- test_flow_sim: Graphic s-flows, self-similar certificates and translators
- test_spectral: Stability functional and cone classification
- test_density: Cone densities and sphere entropies
- test_cli: Commands, manifests and exit statuses
"""
