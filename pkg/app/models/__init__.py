from .collar import CollarData, FermiChart, SecondFF
from .functional import FUNCTIONAL_KINDS, Functional
from .gluing import DecompositionTerms, GluedMetric, ModifiedMetric
from .lambda2 import Lambda2Form, SymmetricOperator2
from .metric import ChartDomain, FiniteDifferenceConfig, MetricField
from .profile import BumpProfile
from .scenario import Scenario
from .smoothing import MollifierConfig, SmoothedMetric
