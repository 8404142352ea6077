"""Monte Carlo and quadrature toolkit for subordinate Brownian motion with a Gaussian component."""
from .bernstein import BernsteinFunction, parse_bernstein
from .config import RunConfig, load_config
from .geometry import parse_domain
from .jump_kernel import JumpKernel, build_kernel
from .sampler import Grading, SchemeConfig, simulate_exit, simulate_exit_batch

__version__ = "0.1.0"

__all__ = ["BernsteinFunction", "parse_bernstein", "RunConfig", "load_config", "parse_domain", "JumpKernel",
           "build_kernel", "Grading", "SchemeConfig", "simulate_exit", "simulate_exit_batch"]
