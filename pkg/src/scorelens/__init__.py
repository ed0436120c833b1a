"""Interpretable binary classification of assessment score levels.

Subpackages: ``dataset`` (ingestion and preprocessing), ``models`` (eight
classifier families), ``validation`` (stratified cross-validation and
metrics), ``attribution`` (Shapley-value explanations), ``pipeline``
(config, experiments, CLI). ``_kernels.BACKEND`` reports whether the
compiled split-scan core or the numpy fallback is active.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
