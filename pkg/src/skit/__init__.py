"""skit: detector scoring, detector allocation and detection fusion.

Subpackages
-----------
metrics
    IoU matching, COCO AP/AR and LRP/oLRP.
allocation
    Detector-to-stream assignment as an integer program with an exact solver
    and an independent verifier.
fusion
    Log-odds saliency grid updated from positive and negative observations.
salient
    Thresholding and clustering of the grid into geolocated objects.
sim
    Synthetic scenarios and detectors that replay the whole pipeline.
"""
__version__ = "0.1.0"
