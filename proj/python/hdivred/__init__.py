"""H(div) solver toolkit: algebraic hybridization and static condensation.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from ._core import (  # noqa: F401
    CapExceededError,
    FormatError,
    SingularBlockError,
    ValidationError,
    bench,
    export_instance,
    hybridized_matrix,
    import_solve,
    solve,
    space_info,
    verify,
    __version__,
)

__all__ = [
    "CapExceededError",
    "FormatError",
    "SingularBlockError",
    "ValidationError",
    "bench",
    "export_instance",
    "hybridized_matrix",
    "import_solve",
    "solve",
    "space_info",
    "verify",
    "__version__",
]
