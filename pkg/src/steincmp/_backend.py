"""Select the compiled core when it is importable, else the numpy fallback.

Set ``STEINCMP_BACKEND=python`` to force the fallback.
"""
import logging
import os

logger = logging.getLogger(__name__)

_choice = os.environ.get("STEINCMP_BACKEND", "auto").lower()

if _choice == "python":
    from . import _fallback as impl
else:
    try:
        from . import _core as impl
    except ImportError:
        if _choice == "cython":
            raise
        logger.debug("compiled core unavailable, using numpy fallback")
        from . import _fallback as impl

from . import _fallback as fallback

NAME = impl.NAME
lda_gibbs_sweeps = impl.lda_gibbs_sweeps
bow_stein_gram = impl.bow_stein_gram
