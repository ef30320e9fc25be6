"""Data sources: synthetic subspace classes, the four-atom sample, MNIST."""

from .mnist import MnistSource, fetch_mnist, load_mnist, parse_idx
from .prop1 import Prop1Config, gen_prop1
from .synthetic import SubspaceDistribution, SyntheticConfig, gen_synthetic, make_distribution

__all__ = [
    "MnistSource",
    "Prop1Config",
    "SubspaceDistribution",
    "SyntheticConfig",
    "fetch_mnist",
    "gen_prop1",
    "gen_synthetic",
    "load_mnist",
    "make_distribution",
    "parse_idx",
]
