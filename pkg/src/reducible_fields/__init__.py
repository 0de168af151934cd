"""Free quantum fields in a reducible representation of the canonical
commutation relations: one truncated oscillator per wave-vector node."""

from .core_fock import *  # noqa: F401,F403
from .kspace import *  # noqa: F401,F403
from .polarization import *  # noqa: F401,F403
from .scalar_field import *  # noqa: F401,F403
from .em_field import *  # noqa: F401,F403
from .photon_states import *  # noqa: F401,F403

__version__ = "0.1.0"
