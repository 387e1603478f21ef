"""Supported-architecture walk over a torch module.

The downstream executor runs plain chains of conv / relu / 2x2 average
pool / global average pool / dense, so only checkpoints with exactly
that shape convert. Anything else is rejected up front with a message
naming the offending module.
"""

from __future__ import annotations

import torch
from torch import nn


class UnsupportedArchitecture(ValueError):
    pass


def _check_conv(name: str, mod: nn.Conv2d) -> None:
    if mod.groups != 1:
        raise UnsupportedArchitecture(f"{name}: grouped conv not supported")
    if mod.dilation != (1, 1):
        raise UnsupportedArchitecture(f"{name}: dilated conv not supported")
    kh, kw = mod.kernel_size
    if kh != kw:
        raise UnsupportedArchitecture(f"{name}: kernel must be square")
    if isinstance(mod.padding, str):
        raise UnsupportedArchitecture(f"{name}: string padding not supported")
    if mod.stride[0] != mod.stride[1] or mod.padding[0] != mod.padding[1]:
        raise UnsupportedArchitecture(f"{name}: stride/padding must be equal "
                                      f"in both dimensions")


def walk(model: nn.Module) -> list[tuple[str, nn.Module]]:
    """Supported layers of a chain model, in execution order.

    The model must be an nn.Sequential (or expose its pipeline as
    direct children in order). Flatten is accepted but carries no
    container entry; it may only appear after the global pool.
    """
    chain = list(model.named_children())
    if not chain:
        raise UnsupportedArchitecture("model has no child modules")
    out: list[tuple[str, nn.Module]] = []
    seen_global_pool = False
    for name, mod in chain:
        if isinstance(mod, nn.Conv2d):
            _check_conv(name, mod)
            out.append((name, mod))
        elif isinstance(mod, nn.ReLU):
            out.append((name, mod))
        elif isinstance(mod, nn.AvgPool2d):
            k = mod.kernel_size if isinstance(mod.kernel_size, int) else mod.kernel_size[0]
            s = mod.stride if isinstance(mod.stride, int) else (mod.stride or k)
            if isinstance(s, tuple):
                s = s[0]
            if k != 2 or s != 2:
                raise UnsupportedArchitecture(
                    f"{name}: only 2x2 stride-2 average pooling converts")
            out.append((name, mod))
        elif isinstance(mod, nn.AdaptiveAvgPool2d):
            size = mod.output_size
            if size not in (1, (1, 1)):
                raise UnsupportedArchitecture(
                    f"{name}: only global (output size 1) pooling converts")
            seen_global_pool = True
            out.append((name, mod))
        elif isinstance(mod, nn.Flatten):
            if not seen_global_pool:
                raise UnsupportedArchitecture(
                    f"{name}: flatten before global pooling does not convert")
            continue
        elif isinstance(mod, nn.Linear):
            out.append((name, mod))
        else:
            raise UnsupportedArchitecture(
                f"{name}: {type(mod).__name__} has no container equivalent")
    return out


def conv_layers(model: nn.Module) -> list[tuple[str, nn.Conv2d]]:
    return [(n, m) for n, m in walk(model) if isinstance(m, nn.Conv2d)]


def load_checkpoint(path) -> tuple[nn.Module, tuple[int, int, int], dict]:
    """Read a saved bundle: the module, its input shape, optional extras.

    The bundle is a dict with keys "model" (an nn.Module) and
    "input_shape" ((C, H, W)); optional "smoke_input"/"smoke_logits"
    record a known forward result that is re-checked on load.
    """
    try:
        bundle = torch.load(path, map_location="cpu", weights_only=False)
    except OSError:
        raise
    except Exception as e:
        raise ValueError(f"{path}: cannot load checkpoint: {e}") from e
    if not isinstance(bundle, dict) or "model" not in bundle \
            or "input_shape" not in bundle:
        raise ValueError(f"{path}: expected a dict with 'model' and "
                         f"'input_shape'")
    model = bundle["model"]
    if not isinstance(model, nn.Module):
        raise ValueError(f"{path}: 'model' is not a torch module")
    shape = tuple(int(v) for v in bundle["input_shape"])
    if len(shape) != 3:
        raise ValueError(f"{path}: input_shape must be (C, H, W)")
    model.eval()
    smoke_forward(model, shape, bundle.get("smoke_input"),
                  bundle.get("smoke_logits"))
    return model, shape, bundle


def smoke_forward(model: nn.Module, input_shape, smoke_input=None,
                  smoke_logits=None) -> None:
    """Run one forward pass; verify recorded logits when present."""
    with torch.no_grad():
        if smoke_input is not None:
            x = torch.as_tensor(smoke_input, dtype=torch.float64)
        else:
            x = torch.zeros(input_shape, dtype=torch.float64)
        z = model.double()(x.unsqueeze(0)).flatten()
    if smoke_logits is not None:
        want = torch.as_tensor(smoke_logits, dtype=torch.float64).flatten()
        if want.shape != z.shape or not torch.allclose(z, want, atol=1e-4):
            raise ValueError("checkpoint smoke check failed: forward pass "
                             "does not reproduce the recorded logits")
