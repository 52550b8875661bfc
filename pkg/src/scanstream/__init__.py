"""Streaming document-scan capture engine.

Two cascading networks run over a live frame stream: a lightweight
CNN-LSTM (PCN) watches every frame for page changes and coarse capture
quality, and a larger MobileNetV2-style classifier (CapN) confirms
capture quality on the few frames that pass the PCN's filter. The
package also contains the training pipeline (distillation from CapN to
PCN, label padding, look-ahead targets), an event-based evaluator, and
a synthetic scan-video generator used for desk-scale training and
acceptance testing.
"""

__version__ = "0.1.0"
