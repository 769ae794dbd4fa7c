"""Latent variable model families: PPCA, LDA and Gaussian DP mixtures."""
from .gdpm import GdpmModel, gdpm_mixture_weights, gdpm_posterior_sampler
from .lda import LdaModel, lda_collapsed_gibbs
from .ppca import PpcaModel, ppca_posterior_exact, ppca_posterior_mcmc

__all__ = [
    "PpcaModel",
    "ppca_posterior_exact",
    "ppca_posterior_mcmc",
    "LdaModel",
    "lda_collapsed_gibbs",
    "GdpmModel",
    "gdpm_posterior_sampler",
    "gdpm_mixture_weights",
    "model_from_dict",
]


def model_from_dict(d):
    family = str(d.get("family", "")).lower()
    if family == "ppca":
        return PpcaModel.from_dict(d)
    if family == "lda":
        return LdaModel.from_dict(d)
    if family == "gdpm":
        return GdpmModel.from_dict(d)
    raise ValueError(f"unknown model family {d.get('family')!r}")
