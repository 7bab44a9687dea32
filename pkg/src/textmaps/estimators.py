"""Estimator-style wrappers so the codec composes with sklearn pipelines.

Both estimators are stateless transformations with hyperparameters; ``fit``
only validates and returns ``self``.  They implement the standard
``get_params`` / ``set_params`` protocol without depending on scikit-learn,
so ``sklearn.base.clone`` and ``sklearn.pipeline.Pipeline`` accept them
whenever scikit-learn happens to be installed.
"""

from __future__ import annotations

import inspect

from .decoder import DecoderConfig, ScoreMaps, decode, decode_msr
from .encoder import EncoderConfig, LabelMaps, TextAnnotation, encode, normalize_mode
from .errors import ParameterError

try:  # scikit-learn is optional; inherit its base protocol when present
    from sklearn.base import BaseEstimator as _OptionalBase
except ImportError:  # pragma: no cover - exercised only without sklearn
    _OptionalBase = object


class _ParamsMixin(_OptionalBase):
    """Parameter introspection compatible with the sklearn estimator API."""

    @classmethod
    def _param_names(cls):
        signature = inspect.signature(cls.__init__)
        return sorted(n for n in signature.parameters if n != "self")

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = self._param_names()
        for name, value in params.items():
            if name not in valid:
                raise ParameterError(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters are {valid}"
                )
            setattr(self, name, value)
        return self

    def __sklearn_is_fitted__(self):
        # Stateless transformations: nothing is learned in fit.
        return True

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({params})"


def check_sample(sample):
    """Validate one encoder input sample: (annotations, (height, width))."""
    try:
        annotations, (height, width) = sample
    except (TypeError, ValueError):
        raise ParameterError(
            "each sample must be (annotations, (height, width)), got "
            f"{type(sample).__name__}"
        ) from None
    annotations = tuple(annotations)
    for ann in annotations:
        if not isinstance(ann, TextAnnotation):
            raise ParameterError(f"expected TextAnnotation, got {type(ann).__name__}")
    return annotations, int(height), int(width)


def check_score_maps(item) -> ScoreMaps:
    """Accept ScoreMaps directly or LabelMaps as perfect predictions."""
    if isinstance(item, ScoreMaps):
        return item
    if isinstance(item, LabelMaps):
        return ScoreMaps.from_labels(item)
    raise ParameterError(f"expected ScoreMaps or LabelMaps, got {type(item).__name__}")


class LabelMapEncoder(_ParamsMixin):
    """Transform annotation samples into label maps.

    Parameters mirror the encoder configuration: ``alpha`` (shrink ratio),
    ``beta`` (expansion ratio) and ``mode`` ("bidir" or "msr").  Samples are
    ``(annotations, (height, width))`` pairs; ``transform`` returns one
    LabelMaps per sample.
    """

    def __init__(self, alpha: float = 0.6, beta: float = 1.2, mode: str = "bidir"):
        self.alpha = alpha
        self.beta = beta
        self.mode = mode

    def _config(self) -> EncoderConfig:
        return EncoderConfig(alpha=self.alpha, beta=self.beta, mode=normalize_mode(self.mode))

    def fit(self, X, y=None):
        self._config()
        for sample in X:
            check_sample(sample)
        return self

    def transform(self, X):
        config = self._config()
        out = []
        for sample in X:
            annotations, height, width = check_sample(sample)
            out.append(encode(annotations, width, height, config))
        return out

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class InstanceDecoder(_ParamsMixin):
    """Predict instance polygons from score maps.

    ``predict`` accepts a list of ScoreMaps (or LabelMaps, treated as
    perfect predictions) and returns a list of DecodedInstance lists.  With
    ``mode="msr"`` the orientation-gated grouping is skipped and kernel
    pixels are shifted directly.
    """

    def __init__(
        self,
        gamma: float = 3.0,
        epsilon: float = 0.9063,
        gamma_scale: float = 4.0,
        min_kernel_area: int = 16,
        binarize_region: float = 0.5,
        binarize_kernel: float = 0.5,
        alpha_radius_scale: float = 2.0,
        connectivity: int = 8,
        mode: str = "bidir",
    ):
        self.gamma = gamma
        self.epsilon = epsilon
        self.gamma_scale = gamma_scale
        self.min_kernel_area = min_kernel_area
        self.binarize_region = binarize_region
        self.binarize_kernel = binarize_kernel
        self.alpha_radius_scale = alpha_radius_scale
        self.connectivity = connectivity
        self.mode = mode

    def _config(self) -> DecoderConfig:
        return DecoderConfig(
            gamma=self.gamma,
            epsilon=self.epsilon,
            gamma_scale=self.gamma_scale,
            min_kernel_area=self.min_kernel_area,
            binarize_region=self.binarize_region,
            binarize_kernel=self.binarize_kernel,
            alpha_radius_scale=self.alpha_radius_scale,
            connectivity=self.connectivity,
        )

    def fit(self, X, y=None):
        self._config()
        normalize_mode(self.mode)
        return self

    def predict(self, X):
        config = self._config()
        decoder = decode_msr if normalize_mode(self.mode) == "msr" else decode
        return [decoder(check_score_maps(item), config) for item in X]

    def transform(self, X):
        return self.predict(X)
