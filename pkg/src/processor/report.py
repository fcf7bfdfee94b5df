import logging
from typing import Iterable

from src.models.errors import BudgetExceeded
from src.models.recursion import GroupWord, RecursionSystem
from src.processor.activity import activity_class, pold_contraction_test
from src.processor.contraction import certify_contraction, dim_zero_test
from src.processor.dimension import dimension_report
from src.processor.equality_backends import faithful_backend
from src.processor.level_graphs import level_transitive
from src.utils.settings import DEFAULT_SETTINGS, EngineSettings

logger = logging.getLogger(__name__)


def system_report(sys: RecursionSystem, settings: EngineSettings = DEFAULT_SETTINGS, levels: int = 3,
                  n_range: Iterable[int] = (1, 2), d_range: Iterable[int] = (0, 1, 2)) -> dict:
    """One-page summary of everything the toolkit can say about a system"""
    report = {
        'generators': list(sys.names),
        'alphabet': list(sys.alphabet.letters),
        'backend': sys.backend.kind
    }

    status = certify_contraction(sys, settings)
    report['contraction'] = status.status
    report['contraction_source'] = status.source
    nucleus = status.nucleus if status.is_contracting else None
    report['nucleus_size'] = len(nucleus) if nucleus else None
    if nucleus:
        report['nucleus'] = nucleus.names()
    if status.witness:
        report['witness'] = status.witness

    report['transitivity'] = level_transitive(sys, levels, nucleus, settings).rows

    if nucleus:
        report['dim_zero'] = dim_zero_test(sys, settings=settings, status=status).status
        tree = faithful_backend(sys, settings)
        generating_set = [tree.element(e.nf) for e in nucleus.elements]
        dimension = dimension_report(sys, n_range, d_range, "greedy", settings, generating_set,
                                     stop_when_certified=True)
        report['dimension'] = dimension.to_dict()
        report['best_dimension_bound'] = dimension.best_bound
    else:
        report['dim_zero'] = 'unknown'
        report['best_dimension_bound'] = None

    activity = {}
    for i, name in enumerate(sys.names):
        try:
            activity[name] = str(activity_class(sys, GroupWord.generator(i), settings))
        except BudgetExceeded as exc:
            logger.warning(f"Activity of {name} unavailable: {exc}")
            activity[name] = 'unknown'
    report['activity'] = activity

    pold = status if status.source == 'pold' else pold_contraction_test(sys, settings=settings)
    report['pold'] = pold.status
    return report
