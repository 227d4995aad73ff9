"""
Heat kernel learning: JKO-trained parametric kernels, heat-kernel SVGD and
kernel-based generative training, with closed-form oracles to check them.
"""

__version__ = "0.1.0"
