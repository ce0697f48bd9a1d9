//! Localized functionals, the Moser ladder, the interpolation-inequality
//! checker, the self-consistency fit and weak-form residuals.

pub mod gns;
pub mod ledger;
pub mod moser;
pub mod selfconsistency;
pub mod weak_form;

pub use gns::{extend_constant, fit_constant, GnsCheck, GnsFit, GnsTerms};
pub use ledger::{FunctionalLedger, LedgerConfig, LedgerRow};
pub use moser::{base_exponent, moser_report, MoserLadder, MoserReport};
pub use selfconsistency::{fit_c0, threshold_check, threshold_kappa, SelfConsistencyFit, ThresholdCheck};
pub use weak_form::{TestFunction, WeakFormRecorder, WeakResidual};
