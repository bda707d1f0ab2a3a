"""Random channel synthesis from angular responses."""
from .batch import choose_engine, generate
from .complete import (BLOCKS, CompleteResponseGrid, draw_complete_response,
                       synthesize_complete, synthesize_complete_grid)
from .core import (AngularResponseGrid, ChannelRealization, SynthesisConfig, config_hash,
                   draw_angular_response, forward_transform, freespace_reference,
                   inject_evanescent_node, lsv_impulse_response, mixed_response_receive,
                   mixed_response_source, spectral_response, spectral_response_at,
                   synthesize, synthesize_realization, system_function_shift)
from .kronecker import CompleteKroneckerSampler, KroneckerSampler
from .planar import (PlanarConfig, PlanarDensity, PlanarFactor, PlanarResponse,
                     draw_planar_response, normalize_planar_factor, planar_average_power,
                     planar_covariance, synthesize_2d, synthesize_planar)
from .rays import synthesize_rays
from .rng import complex_normal, stream
