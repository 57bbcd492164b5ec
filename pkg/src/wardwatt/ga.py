"""Genetic-algorithm engine: load balancing and hyperparameter search.

Individuals are plain 1-D float64 arrays (populations are 2-D arrays).
Three concrete schemes live here:

* run_steady_state: tournament parents, SBX crossover, adaptive mutation,
  offspring replace the two worst members each generation.
* run_worst_replacement: no crossover; the single worst member is
  replaced by its adaptively mutated form each generation.
* generational rank-truncation search (generational_search), used for
  hyperparameter tuning: top-k parents survive, SBX + mutation offspring
  fill the population.

Fitness for load balancing is the negative total absolute deviation from
the forecast, so bigger is better and 0 is perfect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, TrainingDivergenceError
from .series import Forecast, LagMatrix, ScalerParams, _readonly


@dataclass(frozen=True)
class GaConfig:
    """Knobs shared by every GA scheme in this module.

    mutation_std=None means 5% of the mean forecasted load (resolved at
    run time); hyperparameter searches override it per gene instead.
    """

    population_size: int = 20
    generations: int = 100
    tournament_k: int = 3
    sbx_eta: float = 2.0
    base_mutation_prob: float = 0.2
    mutation_std: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population must hold at least two individuals")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.tournament_k < 1:
            raise ValueError("tournament size must be >= 1")
        if not self.sbx_eta > 0:
            raise ValueError("SBX eta must be positive")
        if not 0.0 <= self.base_mutation_prob <= 1.0:
            raise ValueError("base mutation probability must lie in [0, 1]")
        if self.mutation_std is not None and not self.mutation_std > 0:
            raise ValueError("mutation std must be positive when given")


@dataclass(frozen=True, eq=False)
class BalanceResult:
    """Outcome of a load-balancing run.

    fitness_history holds the population best after each generation,
    mean_history the population mean (both length == generations).
    """

    best_solution: np.ndarray
    best_fitness: float
    fitness_history: np.ndarray
    mean_history: np.ndarray
    strategy: str

    def __post_init__(self):
        sol = np.array(self.best_solution, dtype=np.float64, copy=True)
        hist = np.array(self.fitness_history, dtype=np.float64, copy=True)
        mean = np.array(self.mean_history, dtype=np.float64, copy=True)
        if sol.ndim != 1 or not np.all(np.isfinite(sol)):
            raise ValueError("best solution must be a finite 1-D array")
        if hist.shape != mean.shape or hist.ndim != 1:
            raise ValueError("histories must be 1-D and equally long")
        object.__setattr__(self, "best_solution", _readonly(sol))
        object.__setattr__(self, "fitness_history", _readonly(hist))
        object.__setattr__(self, "mean_history", _readonly(mean))


def load_balance_fitness(solution, forecast) -> float:
    """Negative sum of absolute deviations between allocation and forecast."""
    sol = np.asarray(solution, dtype=np.float64)
    fc = np.asarray(forecast, dtype=np.float64)
    if sol.shape != fc.shape or sol.ndim != 1 or len(sol) == 0:
        raise ValueError("solution and forecast must be equally long 1-D arrays")
    if not (np.all(np.isfinite(sol)) and np.all(np.isfinite(fc))):
        raise ValueError("fitness needs finite inputs")
    return -float(np.abs(sol - fc).sum())


def init_population(size: int, forecast, rng: np.random.Generator) -> np.ndarray:
    """Uniform per-gene draws within +/-20% of the forecasted load."""
    fc = np.asarray(forecast, dtype=np.float64)
    if size < 1:
        raise ValueError("population size must be >= 1")
    if fc.ndim != 1 or len(fc) == 0 or not np.all(np.isfinite(fc)):
        raise ValueError("forecast must be a finite nonempty 1-D array")
    if np.any(fc < 0):
        raise ValueError("negative forecast entries make the +/-20% window undefined")
    return rng.uniform(0.8 * fc, 1.2 * fc, size=(size, len(fc)))


def tournament_select(
    population: np.ndarray,
    fitnesses: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Best of k uniform draws (with replacement); returns a copy."""
    population = np.asarray(population, dtype=np.float64)
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    if population.ndim != 2 or len(population) == 0:
        raise ValueError("population must be a nonempty 2-D array")
    if len(fitnesses) != len(population):
        raise ValueError("need one fitness per individual")
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    drawn = rng.integers(0, len(population), size=k)
    winner = drawn[int(np.argmax(fitnesses[drawn]))]
    return population[winner].copy()


def sbx_crossover(
    parent_a,
    parent_b,
    eta: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover; children average to the parent mean.

    Per gene: draw u ~ U(0,1); beta = (2u)^(1/(eta+1)) for u <= 0.5, else
    (1/(2(1-u)))^(1/(eta+1)); the children are the +/-beta blends.
    """
    a = np.asarray(parent_a, dtype=np.float64)
    b = np.asarray(parent_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise ValueError("parents must be equally long 1-D arrays")
    if not eta > 0:
        raise ValueError("SBX eta must be positive")
    u = rng.random(len(a))
    exponent = 1.0 / (eta + 1.0)
    beta = np.where(
        u <= 0.5,
        np.power(2.0 * u, exponent),
        np.power(1.0 / (2.0 * (1.0 - u)), exponent),
    )
    child_a = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b)
    child_b = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b)
    return child_a, child_b


def adaptive_mutate(
    individual,
    generation: int,
    max_generations: int,
    base_prob: float,
    std_dev,
    rng: np.random.Generator,
) -> np.ndarray:
    """Gaussian mutation with linearly decaying per-gene probability.

    Effective probability is base_prob * (1 - generation/max_generations).
    std_dev may be a scalar or a per-gene array. Returns a new array; the
    RNG always consumes one uniform and one normal per gene, so streams
    stay aligned whatever the mask.
    """
    genes = np.asarray(individual, dtype=np.float64)
    if max_generations < 1:
        raise ValueError("max_generations must be >= 1")
    if not 0 <= generation <= max_generations:
        raise ValueError("generation must lie in [0, max_generations]")
    if not 0.0 <= base_prob <= 1.0:
        raise ValueError("base mutation probability must lie in [0, 1]")
    std = np.asarray(std_dev, dtype=np.float64)
    if np.any(std < 0):
        raise ValueError("mutation std must be >= 0")
    prob = base_prob * (1.0 - generation / max_generations)
    mask = rng.random(len(genes)) < prob
    noise = rng.normal(0.0, np.broadcast_to(std, genes.shape))
    return np.where(mask, genes + noise, genes)


def _forecast_values(forecast) -> np.ndarray:
    if isinstance(forecast, Forecast):
        return np.asarray(forecast.values, dtype=np.float64)
    return np.asarray(forecast, dtype=np.float64)


def _make_fitness(values: np.ndarray, penalty) -> Callable[[np.ndarray], float]:
    if penalty is None:
        return lambda sol: load_balance_fitness(sol, values)
    return lambda sol: load_balance_fitness(sol, values) - float(penalty(sol))


def _resolve_std(cfg: GaConfig, values: np.ndarray) -> float:
    if cfg.mutation_std is not None:
        return cfg.mutation_std
    return 0.05 * float(values.mean())


def run_steady_state(forecast, cfg: GaConfig, penalty=None) -> BalanceResult:
    """Steady-state load balancing: offspring replace the two worst.

    One generation is a full population's worth of replacement events:
    population_size // 2 rounds (at least one), each drawing two
    tournament parents, applying SBX and adaptive mutation, and
    overwriting the two lowest-fitness members (ties to the lowest
    index). With more than two members the best individual always
    survives, so the best-fitness history is non-decreasing. The
    mutation schedule is indexed by generation, not by round, so every
    round in a generation shares one mutation probability.

    ``penalty`` is an optional hook called with a candidate solution; its
    value is subtracted from the fitness. It ships disabled (None).
    """
    values = _forecast_values(forecast)
    fitness = _make_fitness(values, penalty)
    rng = np.random.default_rng(cfg.seed)
    std = _resolve_std(cfg, values)
    population = init_population(cfg.population_size, values, rng)
    fits = np.array([fitness(ind) for ind in population])
    best_hist = np.empty(cfg.generations)
    mean_hist = np.empty(cfg.generations)
    rounds = max(1, cfg.population_size // 2)
    for gen in range(cfg.generations):
        for _ in range(rounds):
            parent_a = tournament_select(population, fits, cfg.tournament_k, rng)
            parent_b = tournament_select(population, fits, cfg.tournament_k, rng)
            child_a, child_b = sbx_crossover(parent_a, parent_b, cfg.sbx_eta, rng)
            child_a = adaptive_mutate(
                child_a, gen, cfg.generations, cfg.base_mutation_prob, std, rng
            )
            child_b = adaptive_mutate(
                child_b, gen, cfg.generations, cfg.base_mutation_prob, std, rng
            )
            worst_two = np.argsort(fits, kind="stable")[:2]
            for slot, child in zip(worst_two, (child_a, child_b)):
                population[slot] = child
                fits[slot] = fitness(child)
        best_hist[gen] = fits.max()
        mean_hist[gen] = fits.mean()
    best = int(np.argmax(fits))
    return BalanceResult(
        best_solution=population[best],
        best_fitness=float(fits[best]),
        fitness_history=best_hist,
        mean_history=mean_hist,
        strategy="steady",
    )


def run_worst_replacement(forecast, cfg: GaConfig, penalty=None) -> BalanceResult:
    """Mutation-only load balancing: the worst member is mutated in place.

    No crossover. Each generation the lowest-fitness individual (ties to
    the lowest index) is replaced by its adaptively mutated form, better
    or not; everyone else is untouched, so the best member persists.
    """
    values = _forecast_values(forecast)
    fitness = _make_fitness(values, penalty)
    rng = np.random.default_rng(cfg.seed)
    std = _resolve_std(cfg, values)
    population = init_population(cfg.population_size, values, rng)
    fits = np.array([fitness(ind) for ind in population])
    best_hist = np.empty(cfg.generations)
    mean_hist = np.empty(cfg.generations)
    for gen in range(cfg.generations):
        worst = int(np.argmin(fits))
        mutated = adaptive_mutate(
            population[worst], gen, cfg.generations, cfg.base_mutation_prob, std, rng
        )
        population[worst] = mutated
        fits[worst] = fitness(mutated)
        best_hist[gen] = fits.max()
        mean_hist[gen] = fits.mean()
    best = int(np.argmax(fits))
    return BalanceResult(
        best_solution=population[best],
        best_fitness=float(fits[best]),
        fitness_history=best_hist,
        mean_history=mean_hist,
        strategy="worst",
    )


def generational_search(
    fitness: Callable[[np.ndarray], float],
    bounds,
    pop_size: int,
    n_parents: int,
    generations: int,
    cfg: GaConfig,
    rng: np.random.Generator,
    seed_points: Sequence = (),
) -> tuple[np.ndarray, float, list[np.ndarray]]:
    """Rank-truncation GA over a box-bounded real gene space.

    The top n_parents by fitness survive each generation; SBX + adaptive
    mutation offspring (clipped to bounds) fill the rest. Mutation std is
    10% of each gene's range. seed_points are injected into the initial
    population (clipped), handy for guaranteeing a baseline candidate.

    Returns (best_genes, best_fitness, history) where history holds one
    fitness array per generation; the best is tracked over every
    evaluation, so it is at least as good as any logged candidate.
    """
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or len(bounds) == 0:
        raise ValueError("bounds must be an (n_genes, 2) array")
    if np.any(bounds[:, 0] > bounds[:, 1]):
        raise ValueError("each gene bound needs lo <= hi")
    if n_parents < 1 or pop_size < 2:
        raise ValueError("need pop_size >= 2 and at least one parent")
    if pop_size < n_parents:
        raise ConfigError("population_size", "smaller than the parent count")
    if generations < 1:
        raise ValueError("generations must be >= 1")
    lo, hi = bounds[:, 0], bounds[:, 1]
    std = 0.1 * (hi - lo)
    population = rng.uniform(lo, hi, size=(pop_size, len(bounds)))
    for row, point in enumerate(seed_points[:pop_size]):
        population[row] = np.clip(np.asarray(point, dtype=np.float64), lo, hi)
    best_genes = population[0].copy()
    best_fit = -np.inf
    history: list[np.ndarray] = []
    for gen in range(generations):
        fits = np.array([float(fitness(ind)) for ind in population])
        history.append(fits)
        top = int(np.argmax(fits))
        if fits[top] > best_fit:
            best_fit = float(fits[top])
            best_genes = population[top].copy()
        order = np.argsort(-fits, kind="stable")
        parents = population[order[:n_parents]].copy()
        children = []
        while len(children) < pop_size - n_parents:
            pick = rng.integers(0, n_parents, size=2)
            child_a, child_b = sbx_crossover(
                parents[pick[0]], parents[pick[1]], cfg.sbx_eta, rng
            )
            for child in (child_a, child_b):
                child = adaptive_mutate(
                    child, gen, generations, cfg.base_mutation_prob, std, rng
                )
                children.append(np.clip(child, lo, hi))
        if children:
            population = np.vstack([parents, children[: pop_size - n_parents]])
        else:
            population = parents  # pop_size == n_parents: pure rank survival
    return best_genes, best_fit, history


# Gene order and bounds for LSTM tuning: layer sizes, then dropout genes
# (the network's dropout rate is gene / 10).
DEFAULT_LSTM_SEARCH_SPACE = ((20, 100), (20, 100), (1, 5), (1, 5))


class LstmTuneData(NamedTuple):
    """Scaled train/test windows plus the scaler for original-scale MAE."""

    train: LagMatrix
    test: LagMatrix
    scaler: ScalerParams


def tune_lstm(
    search_space,
    data: LstmTuneData,
    ga_cfg: GaConfig,
    n_parents: int = 3,
    return_history: bool = False,
):
    """Search LSTM hyperparameters by short-training fitness.

    Genes are (units1, units2, dropout1, dropout2); a candidate's fitness
    is the negative test MAE (original scale) of a network built from the
    rounded genes and trained for five epochs. A diverging candidate gets
    -inf rather than aborting the search. Returns the best candidate
    rounded to valid integers (with the per-generation fitness arrays when
    return_history is set).
    """
    from . import lstm  # local import: lstm never imports back

    bounds = np.asarray(search_space, dtype=np.float64)
    if bounds.shape != (4, 2):
        raise ConfigError("search_space", "must give (lo, hi) for all four genes")
    for i, (full_lo, full_hi) in enumerate(DEFAULT_LSTM_SEARCH_SPACE):
        if bounds[i, 0] < full_lo or bounds[i, 1] > full_hi:
            raise ConfigError(
                "search_space",
                f"gene {i} range {bounds[i].tolist()} leaves [{full_lo}, {full_hi}]",
            )
    if ga_cfg.population_size < n_parents:
        raise ConfigError("population_size", "smaller than the parent count")
    if not isinstance(data, LstmTuneData):
        raise ConfigError("data", "expected an LstmTuneData triple")

    original_targets = data.scaler.inverse(data.test.targets)
    train_cfg = lstm.TrainConfig(
        epochs=5, batch_size=32, learning_rate=1e-3, seed=ga_cfg.seed + 2
    )

    def fitness(genes: np.ndarray) -> float:
        hp = lstm.LstmHyperparams(
            units1=int(round(genes[0])),
            units2=int(round(genes[1])),
            dropout1_gene=int(round(genes[2])),
            dropout2_gene=int(round(genes[3])),
        )
        net = lstm.init_network(hp, seed=ga_cfg.seed + 1, window=data.train.window)
        try:
            net, _ = lstm.train(net, data.train, train_cfg)
        except TrainingDivergenceError:
            return -np.inf
        preds = data.scaler.inverse(lstm.predict_rows(net, data.test.rows))
        return -float(np.abs(preds - original_targets).mean())

    rng = np.random.default_rng(ga_cfg.seed)
    best_genes, _, history = generational_search(
        fitness,
        bounds,
        pop_size=ga_cfg.population_size,
        n_parents=n_parents,
        generations=ga_cfg.generations,
        cfg=ga_cfg,
        rng=rng,
    )
    best = lstm.LstmHyperparams(
        units1=int(round(best_genes[0])),
        units2=int(round(best_genes[1])),
        dropout1_gene=int(round(best_genes[2])),
        dropout2_gene=int(round(best_genes[3])),
    )
    return (best, history) if return_history else best
