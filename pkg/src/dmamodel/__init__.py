"""Circuit model of dynamic metasurface antenna (DMA) downlink systems."""

__version__ = "0.1.0"

from .admittance import (AdmittanceSet, CovarianceStack, build_admittances, build_Yrr,
                         build_Yrs_los, build_Yss, build_Yst, build_Ytt,
                         connector_admittance_auto, quadrature_admittance_oracle,
                         ray_sum_channel, rayleigh_covariance, sample_rayleigh)
from .model import (Medium, Scenario, WaveguideSpec, Wavenumbers, build_scenario,
                    derive_wavenumbers, load_scenario, validation_scenario)
from .network import (Excitation, NetworkSolution, equivalent_channel, lorentzian_sweep,
                      reflection_transmission, rf_chain_admittance, solve, solve_bilateral,
                      solve_unilateral, transmit_signal)
from .radiation import (farfield_H, field_in_guide, gain, gain_cut, gain_grid,
                        radiated_power)
from .errors import (ConditioningWarning, DMAError, DMAWarning, GeometryWarning, InvalidInputError,
                     ModelViolationError, NotPSDError, ReflectionWarning, SingleModeWarning,
                     SingularConfigurationError, ToleranceError)
