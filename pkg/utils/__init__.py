from .logger import setup_logger, log_timing
from .parallel import ordered_map
from .seeding import pair_uniforms, substream, trial_key

__all__ = ['setup_logger', 'log_timing', 'ordered_map', 'pair_uniforms', 'substream', 'trial_key']
