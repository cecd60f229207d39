//! Soft-margin support vector machines trained with sequential minimal
//! optimization.
//!
//! The binary machine solves the dual problem
//!
//! ```text
//! maximize   W(α) = Σ αᵢ − ½ Σᵢ Σⱼ αᵢ αⱼ yᵢ yⱼ K(xᵢ, xⱼ)
//! subject to 0 ≤ αᵢ ≤ C,  Σ αᵢ yᵢ = 0
//! ```
//!
//! and predicts with `f(x) = Σ αᵢ yᵢ K(xᵢ, x) + b`. Inputs are z-scored with
//! statistics fitted on the training set; the scaler travels with the model.
//! Multiclass problems are reduced one-vs-one.

mod kernel;
mod multiclass;
mod scaler;
mod smo;

pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use multiclass::{predict_multiclass, train_multiclass, vote, MulticlassModel, PairModel};
pub use scaler::Scaler;
pub use smo::{
    check_kkt, decision_value, dual_objective, gram_matrix, solve_dual, solve_smo, BinarySvmModel, DualSolution,
    KktReport, SvmParams,
};
