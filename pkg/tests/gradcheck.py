"""Central finite-difference oracle for network parameter gradients."""
import numpy as np

from richards_homog.surrogate import backward, mse_loss


def fd_relative_errors(net, X, Y, step=1e-6):
    """Largest relative gap between analytic and central-difference gradients, per parameter array."""
    gw, gb, _ = backward(net, X, Y)
    errs = []
    for analytic, param in zip([*gw, *gb], net.params()):
        numeric = np.empty_like(param)
        flat, nflat = param.reshape(-1), numeric.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up = mse_loss(net, X, Y)
            flat[i] = old - step
            down = mse_loss(net, X, Y)
            flat[i] = old
            nflat[i] = (up - down) / (2 * step)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        rel = np.abs(analytic - numeric) / np.maximum(scale, 1e-7)
        errs.append(float(rel.max()))
    return errs
