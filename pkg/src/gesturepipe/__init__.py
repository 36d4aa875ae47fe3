"""Real-time dynamic arm gesture recognition over OpenPose BODY-25 keypoints.

Kept import-light on purpose: the CLI configures BLAS thread caps before any
numpy-backed submodule loads. Import submodules directly, e.g.
``from gesturepipe import skeleton``.
"""

__version__ = "0.1.0"
