"""Bootstrap mixture SPRT for sequential A/B testing."""

from ._bmsprt import *  # noqa: F401,F403
from ._bmsprt import __doc__  # noqa: F401
