"""treedistill: train MLPs under sparse-orthogonal penalties, distill them into decision trees."""

__version__ = "0.1.0"
