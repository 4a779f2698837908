"""Curvilinear network tracing, EM-style segmentation and graph registration.

Subpackage map:

* :mod:`neurograph.volume`     -- volumes, raw file I/O
* :mod:`neurograph.phantom`    -- deterministic synthetic scenes + ground truth
* :mod:`neurograph.tubularity` -- multiscale vesselness and seed selection
* :mod:`neurograph.pathgraph`  -- overcomplete tubular graphs and pair scoring
* :mod:`neurograph.boosting`   -- AdaBoost over decision stumps
* :mod:`neurograph.ilp`        -- 0/1 integer programming (simplex + B&B + lazy cuts)
* :mod:`neurograph.delineate`  -- maximum-likelihood subgraph extraction, SWC export
* :mod:`neurograph.supervoxel` -- SLIC-style oversegmentation
* :mod:`neurograph.context`    -- oriented context-cue features
* :mod:`neurograph.crf`        -- three-class containment CRF (energy, MAP, learning)
* :mod:`neurograph.register`   -- GP-guided coarse/fine graph alignment
* :mod:`neurograph.metrics`    -- topology and overlap scores
* :mod:`neurograph.cli`        -- the ``neurograph`` command line
"""

__version__ = "0.1.0"
