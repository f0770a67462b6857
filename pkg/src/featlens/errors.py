"""Exception hierarchy for the featlens pipeline."""


class FeatLensError(Exception):
    """Base class for all featlens errors."""


# --- stack / mask preconditions ---

class EmptyGrid(FeatLensError):
    pass


class EmptyLayerSet(FeatLensError):
    pass


class UnknownLayer(FeatLensError):
    pass


class ThresholdOutOfRange(FeatLensError):
    pass


class EmptyRegion(FeatLensError):
    pass


class EmptyMask(FeatLensError):
    pass


# --- clustering ---

class TooFewCandidates(FeatLensError):
    pass


class DegenerateClustering(FeatLensError):
    pass


# --- pose / crops ---

class DegenerateRegion(FeatLensError):
    pass


class WrongPartCount(FeatLensError):
    pass


# --- evaluation ---

class MissingGroundTruth(FeatLensError):
    pass


class InvisiblePart(FeatLensError):
    pass


class DegenerateBox(FeatLensError):
    pass


class NoAnnotations(FeatLensError):
    pass
