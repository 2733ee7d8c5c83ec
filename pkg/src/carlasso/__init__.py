"""Sparse chain-graph models (CAR-LASSO) fitted by Gibbs sampling."""

from .formula import FormulaSpec, parse_formula, validate_against_table
from .ingest import DataTable, DesignMatrices, build_design, read_csv
from .model import CarlassoOut, ChainState, Hyperparams, PosteriorDraws, init_state
from .samplers import sweep_bglasso, sweep_caralasso, sweep_carlasso
from .links import update_latent_logit, update_latent_log, update_latent_probit
from .inference import FitRequest, effective_sample_size, fit, summarize

__version__ = "0.1.0"
