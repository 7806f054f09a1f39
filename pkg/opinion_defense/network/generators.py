"""
Seeded random topologies: regular, Erdos-Renyi, preferential attachment, degree-sequence trees
"""
from abc import ABC, abstractmethod
import logging
import random
from typing import Optional, Sequence, Tuple

import networkx as nx

from ..config import get_settings
from ..errors import ConfigError, GenerationFailed
from .models import UndirectedGraph

logger = logging.getLogger(__name__)


class BaseGenerator(ABC):
    """Base class for graph models; subclasses draw one candidate per call"""

    name: str = "base"

    def validate(self, n: int) -> None:
        if n < 2:
            raise ConfigError("graph generation needs n >= 2", n=n)

    @abstractmethod
    def draw(self, n: int, rng: random.Random) -> nx.Graph:
        """Draw a single (possibly disconnected) candidate graph"""

    def spec(self) -> str:
        return self.name


class RegularGenerator(BaseGenerator):
    name = "regular"

    def __init__(self, degree: int):
        self.degree = int(degree)

    def validate(self, n: int) -> None:
        super().validate(n)
        if self.degree < 1 or self.degree >= n:
            raise ConfigError("regular graph needs 1 <= k < n", k=self.degree, n=n)
        if (n * self.degree) % 2:
            raise ConfigError("regular graph needs n*k even", k=self.degree, n=n)

    def draw(self, n: int, rng: random.Random) -> nx.Graph:
        return nx.random_regular_graph(self.degree, n, seed=rng)

    def spec(self) -> str:
        return f"regular:{self.degree}"


class ErdosRenyiGenerator(BaseGenerator):
    name = "er"

    def __init__(self, p: float):
        self.p = float(p)

    def validate(self, n: int) -> None:
        super().validate(n)
        if not 0.0 < self.p <= 1.0:
            raise ConfigError("edge probability must lie in (0, 1]", p=self.p)

    def draw(self, n: int, rng: random.Random) -> nx.Graph:
        return nx.erdos_renyi_graph(n, self.p, seed=rng)

    def spec(self) -> str:
        return f"er:{self.p:g}"


class PreferentialAttachmentGenerator(BaseGenerator):
    """
    One new node at a time, attached to a single existing node with probability
    proportional to its current degree, starting from one edge. Always a tree.
    """
    name = "ba"

    def draw(self, n: int, rng: random.Random) -> nx.Graph:
        return nx.barabasi_albert_graph(n, 1, seed=rng)


class DegreeSequenceTreeGenerator(BaseGenerator):
    """Uniformly random labeled tree in which node i has degree degrees[i]"""
    name = "tree"

    def __init__(self, degrees: Sequence[int]):
        self.degrees: Tuple[int, ...] = tuple(int(d) for d in degrees)

    def validate(self, n: int) -> None:
        super().validate(n)
        if len(self.degrees) != n:
            raise ConfigError("degree sequence length must equal n", n=n, length=len(self.degrees))
        if min(self.degrees) < 1 or sum(self.degrees) != 2 * (n - 1):
            raise ConfigError("not a tree degree sequence", degrees=self.degrees)

    def draw(self, n: int, rng: random.Random) -> nx.Graph:
        # node i appears degrees[i] - 1 times in the Pruefer code
        code = [i for i, d in enumerate(self.degrees) for _ in range(d - 1)]
        rng.shuffle(code)
        return nx.from_prufer_sequence(code)

    def spec(self) -> str:
        return "tree:" + ",".join(str(d) for d in self.degrees)


def parse_model(spec: str) -> BaseGenerator:
    """Parse `regular:k`, `er:p`, `ba` or `tree:d1,d2,...`"""
    name, _, arg = (spec or "").strip().partition(":")
    name = name.lower()
    try:
        if name == "regular":
            return RegularGenerator(int(arg))
        if name in ("er", "erdos_renyi"):
            return ErdosRenyiGenerator(float(arg))
        if name in ("ba", "preferential_attachment"):
            return PreferentialAttachmentGenerator()
        if name == "tree":
            return DegreeSequenceTreeGenerator([int(x) for x in arg.split(",") if x.strip()])
    except ValueError as e:
        raise ConfigError(f"bad generator argument in '{spec}': {e}")
    raise ConfigError(f"unknown graph model '{spec}' (expected regular:k, er:p, ba or tree:d1,...)")


def generate_graph(model, n: int, seed: int, retries: Optional[int] = None) -> UndirectedGraph:
    """
    Draw a connected graph from `model`, resampling disconnected candidates.

    The whole retry stream is driven by one random.Random(seed), so the result is
    a deterministic function of (model, n, seed).
    """
    generator = parse_model(model) if isinstance(model, str) else model
    generator.validate(n)
    budget = get_settings().generator_retries if retries is None else retries
    rng = random.Random(seed)

    for attempt in range(1, budget + 1):
        g = generator.draw(n, rng)
        g.add_nodes_from(range(n))
        if nx.is_connected(g):
            if attempt > 1:
                logger.info(f"{generator.spec()} n={n} seed={seed}: connected after {attempt} draws")
            W = nx.to_numpy_array(g, nodelist=list(range(n)), weight=None)
            return UndirectedGraph(W=W, labels=tuple(str(i + 1) for i in range(n)))
        logger.debug(f"{generator.spec()} n={n} seed={seed}: draw {attempt} disconnected, resampling")

    logger.warning(f"{generator.spec()} n={n} seed={seed}: no connected draw in {budget} attempts")
    raise GenerationFailed("no connected graph within retry budget",
                           model=generator.spec(), n=n, seed=seed, retries=budget)


def degree_sequence_tree(degrees: Sequence[int], seed: int) -> UndirectedGraph:
    """Random tree whose node i has degree degrees[i]"""
    return generate_graph(DegreeSequenceTreeGenerator(degrees), len(degrees), seed, retries=1)
