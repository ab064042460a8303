"""Olympic medal forecasting toolkit.

Submodules:
    entities    -- country/regime name standardization and dataset quality
    weights     -- dynamic national power weight matrix
    influence   -- country-event scores and PageRank event influence
    regress     -- shared estimation kernels (OLS, logit, penalized Poisson)
    zicp        -- zero-inflated Poisson forecasting and change detection
    coach       -- triple-difference coach effect estimation
    validation  -- backtesting, shock simulation, causal validation
    strategy    -- host/program weighting and resource allocation
    stgcn       -- graph-attention + bidirectional LSTM predictor
    cli         -- command-line front end
"""

__version__ = "0.1.0"
