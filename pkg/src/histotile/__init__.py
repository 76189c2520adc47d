"""histotile: tile-based cancer detection on whole-slide rasters.

Submodules
----------
slide_store   flat raster loading, tiled image pyramids, region reads
annotations   polygon annotation parsing, mask rasterization, area stats
tiling        tile grids, background filtering, labeling, balanced sampling
nnet          small convolutional classifier, training, weight transfer
metrics       exact and histogram-binned ROC-AUC, probability maps, reports
synth         deterministic two-domain synthetic slide generator
pipeline      end-to-end stages wiring the above together
cli           command-line entry point (``histotile <subcommand>``)
"""

__version__ = "0.1.0"
