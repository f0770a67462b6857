"""Model registry and hidden-layer name resolution.

Supported models:
  - googlenet / vgg19: torchvision backbones with ImageNet preprocessing.
    Layer names use the classic notation ("inception_4e/output", "conv5_2")
    and resolve to the matching torchvision submodule; conv names resolve to
    the ReLU that follows, so dumps are post-activation.
  - tinynet: a small fixed-seed CNN that needs no downloaded weights, for
    smoke tests and format fixtures.  Layers "conv1".."conv3", post-ReLU.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import torch
from torch import nn

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class UnknownLayerName(ValueError):
    pass


class ModelLoadFailure(RuntimeError):
    pass


class UnknownModel(ValueError):
    pass


@dataclass
class LoadedModel:
    name: str
    module: nn.Module
    layer_modules: dict[str, nn.Module]
    normalization: tuple[tuple[float, ...], tuple[float, ...]] | None
    default_input_size: tuple[int, int]


class TinyNet(nn.Module):
    """Three strided conv+ReLU stages with fixed random weights."""

    def __init__(self, seed: int = 0):
        super().__init__()
        self.stage1 = nn.Sequential(nn.Conv2d(3, 8, 5, stride=2, padding=2),
                                    nn.ReLU())
        self.stage2 = nn.Sequential(nn.Conv2d(8, 12, 3, stride=2, padding=1),
                                    nn.ReLU())
        self.stage3 = nn.Sequential(nn.Conv2d(12, 16, 3, stride=2, padding=1),
                                    nn.ReLU())
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for p in self.parameters():
                p.copy_(torch.empty_like(p).normal_(std=0.25, generator=gen))

    def forward(self, x):
        return self.stage3(self.stage2(self.stage1(x)))


def _load_tinynet() -> LoadedModel:
    net = TinyNet().eval()
    layers = {f"conv{i}": getattr(net, f"stage{i}") for i in (1, 2, 3)}
    return LoadedModel("tinynet", net, layers, None, (64, 64))


def _load_googlenet() -> LoadedModel:
    from torchvision import models
    try:
        net = models.googlenet(weights=models.GoogLeNet_Weights.IMAGENET1K_V1)
    except Exception as exc:
        raise ModelLoadFailure(f"googlenet weights unavailable: {exc}") from exc
    net.eval()
    layers = {}
    for name, module in net.named_children():
        match = re.fullmatch(r"inception(\d[a-e])", name)
        if match:
            layers[f"inception_{match.group(1)}/output"] = module
    return LoadedModel("googlenet", net, layers,
                       (IMAGENET_MEAN, IMAGENET_STD), (224, 224))


def _load_vgg19() -> LoadedModel:
    from torchvision import models
    try:
        net = models.vgg19(weights=models.VGG19_Weights.IMAGENET1K_V1)
    except Exception as exc:
        raise ModelLoadFailure(f"vgg19 weights unavailable: {exc}") from exc
    net.eval()
    layers = {}
    block, conv_in_block = 1, 0
    modules = list(net.features)
    for idx, module in enumerate(modules):
        if isinstance(module, nn.Conv2d):
            conv_in_block += 1
            # dump the ReLU that follows, so values are post-activation
            layers[f"conv{block}_{conv_in_block}"] = modules[idx + 1]
        elif isinstance(module, nn.MaxPool2d):
            block += 1
            conv_in_block = 0
    return LoadedModel("vgg19", net, layers,
                       (IMAGENET_MEAN, IMAGENET_STD), (224, 224))


REGISTRY = {
    "tinynet": _load_tinynet,
    "googlenet": _load_googlenet,
    "vgg19": _load_vgg19,
}


def load_model(model_name: str) -> LoadedModel:
    if model_name not in REGISTRY:
        raise UnknownModel(
            f"unknown model {model_name!r}; choices: {sorted(REGISTRY)}")
    return REGISTRY[model_name]()


def resolve_layers(model: LoadedModel, layer_names) -> dict[str, nn.Module]:
    missing = [n for n in layer_names if n not in model.layer_modules]
    if missing:
        raise UnknownLayerName(
            f"{missing} not in {model.name}; available: "
            f"{sorted(model.layer_modules)}")
    return {n: model.layer_modules[n] for n in layer_names}
