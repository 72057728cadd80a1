from .layers import Dense, Flatten, Layer, MaxPool, PolyConvLayer, poly_conv_backward, poly_conv_forward
from .network import Network, forward_network
from .store import load_model, save_model

__all__ = [
    "Dense",
    "Flatten",
    "Layer",
    "MaxPool",
    "Network",
    "PolyConvLayer",
    "forward_network",
    "load_model",
    "poly_conv_backward",
    "poly_conv_forward",
    "save_model",
]
