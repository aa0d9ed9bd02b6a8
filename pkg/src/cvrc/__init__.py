"""Complex-valued reservoir computing for interferometric terrain analysis.

The package classifies terrain aspect (north/east/south/west slopes and flat
plains) and estimates slope angles directly from complex-valued rasters whose
phase encodes topography.  A fixed random recurrent network with an
amplitude-saturating, phase-preserving activation maps serialized pixel
windows into state space; only a linear readout is trained, in closed form.

Modules
-------
cxnum       dense complex linear algebra (products, Hermitian solve, radius)
reservoir   the leaky echo-state engine, complex and split-real variants
readout     ridge readout training, forward pass, model persistence
raster      complex rasters, phase differencing, frame/scan serialization
synthscene  synthetic DEM + interferogram generator and ground-truth rules
experiments aspect/slope pipelines, baselines, metrics, parameter sweeps
figures     matplotlib rendering of label maps, profiles, sweeps, traces
cli         batch command-line front end (synth/aspect/slope/sweep/trace)
"""

__version__ = "0.1.0"
