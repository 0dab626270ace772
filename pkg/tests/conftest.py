import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

# allow running the suite from a checkout without installing
_src = Path(__file__).resolve().parent.parent / "src"
if str(_src) not in sys.path:
    try:
        import isde  # noqa: F401
    except ImportError:
        sys.path.insert(0, str(_src))

settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")
