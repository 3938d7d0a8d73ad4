"""Three-phase electromechanical transient simulation for unbalanced
combined transmission and distribution networks."""

from importlib import resources

__version__ = "0.1.0"


def fixture_path(name):
    """Filesystem path of a bundled network or scenario fixture."""
    base = resources.files(__name__) / "fixtures"
    p = base / name
    if not p.is_file():
        p = base / "scenarios" / name
    if not p.is_file():
        raise FileNotFoundError("no bundled fixture named %r" % name)
    return str(p)
