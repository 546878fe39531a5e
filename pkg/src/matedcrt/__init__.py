"""Simulation and analysis of mated-CRT random planar maps."""
from .brownian import (BrownianPath, Topology, covariance_factor, disk_path_with_n,
                       read_path, sample_bridge, sample_disk_excursion, sample_plane,
                       sample_sphere_excursion, write_path)
from .crtmap import (MatedCrtMap, boundary_vertices, brute_force_adjacency, build_map,
                     degree_histogram, read_map, rotation_system_and_faces, write_map)
from .diagnostics import (DiagnosticsReport, degree_tail_fit, diagnose, dirichlet_energy,
                          max_face_diameter, two_scale_consistency)
from .errors import (BudgetError, DomainError, HorizonError, InvariantViolation,
                     SamplingError, SizeError, StatisticsError, StructuralError)
from .harmonic import (HarmonicField, dense_solve, hitting_probabilities, laplacian_apply,
                       solve_dirichlet)
from .kernels import BACKEND
from .tutte import TutteEmbedding, embed_disk, embed_plane, embed_sphere, prokhorov_proxy
from .walks import (EmbeddedCurve, cmp_distance, cmp_distance_loc, exit_vertices,
                    simulate_walk)

__version__ = "0.1.0"
