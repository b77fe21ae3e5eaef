"""Default metric definitions."""

from dnnlib import EasyDict

#----------------------------------------------------------------------------

metric_defaults = EasyDict([(args.name, args) for args in [
    EasyDict(name='jaccard', func_name='metrics.overlap.Jaccard'),
    EasyDict(name='dice',    func_name='metrics.overlap.Dice'),
    EasyDict(name='mcc',     func_name='metrics.correlation.MCC'),
    EasyDict(name='su',      func_name='metrics.information.SymmetricUncertainty'),
    EasyDict(name='mhd',     func_name='metrics.hausdorff.ModifiedHausdorff', normalize=True),
]])

SCORE_NAMES = list(metric_defaults.keys())

#----------------------------------------------------------------------------
