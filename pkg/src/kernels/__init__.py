"""
Parametric positive-definite kernels.

- DeepRbfKernel: exp(-||h(x0) - h(x)||^2) with a learned feature network
- RandomFeatureKernel: cosine random-feature kernel with learned frequencies
- RbfKernel, ConstantKernel, ProductKernel: fixed utility kernels
"""
