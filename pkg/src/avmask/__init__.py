"""Audio-visual binary-mask speech enhancement at desk scale.

Subpackages and modules: ``dsp`` (STFT front end), ``maskcore`` (ideal and
estimated masks), ``nn`` (numpy layers, Adam, gradient checks), ``models``
(audio-only, visual-only and fused networks), ``data`` (mixing, alignment,
synthetic corpus), ``evaluate`` (metrics), ``pipeline`` and ``cli``.
"""

__version__ = "0.1.0"
