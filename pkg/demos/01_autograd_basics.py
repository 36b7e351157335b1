"""A walk through the autodiff engine: tensors, graphs, gradients.

Everything downstream (losses, networks, training) is built on the tiny
reverse-mode engine in corrcolor.autograd, so this script starts there.
Run it with `python demos/01_autograd_basics.py`.
"""

import numpy as np

from corrcolor import autograd as ag
from corrcolor.autograd import astensor, parameter

# A Tensor wraps a float64 numpy array. Operations record the graph as
# they execute, so there is no separate "compile" step.
x = parameter([3.0])
y = ag.mul(x, x)          # y = x^2
y.backward()
print("d(x^2)/dx at x=3:", x.grad)          # -> [6.0]

# The same machinery handles matrices, broadcasting and reductions.
rng = np.random.default_rng(0)
w = parameter(rng.standard_normal((5, 3)))
b = parameter(np.zeros(3))
inputs = astensor(rng.standard_normal((8, 5)))

logits = ag.add(ag.matmul(inputs, w), b)
loss = ag.tmean(ag.square(logits))
loss.backward()
print("loss:", loss.item())
print("weight gradient shape:", w.grad.shape, " bias gradient shape:", b.grad.shape)

# Gradients agree with central finite differences; this check is the
# backbone of the test suite.
def finite_difference(f, array, h=1e-5):
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        orig = array[i]
        array[i] = orig + h
        hi = f()
        array[i] = orig - h
        lo = f()
        array[i] = orig
        grad[i] = (hi - lo) / (2 * h)
    return grad

numeric = finite_difference(
    lambda: ag.tmean(ag.square(ag.add(ag.matmul(inputs, astensor(w.data)), b.data))).item(),
    w.data)
print("max |analytic - numeric|:", np.abs(w.grad - numeric).max())

# Non-finite values are refused loudly rather than propagated:
try:
    ag.log(astensor([1.0, 0.0]))
except ag.NonFiniteError as exc:
    print("caught:", exc)

# And a loss with no trainable ancestors is a bug, not a no-op:
try:
    ag.tsum(ag.square(astensor(np.ones(3)))).backward()
except ag.AutogradError as exc:
    print("caught:", exc)
