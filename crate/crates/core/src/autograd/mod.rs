//! Gradients of PQC expectations and RL losses, plus the Adam optimizer.

mod adam;
mod loss;
mod shift;

pub use adam::{adam_step, AdamConfig, AdamState, LearningRates};
pub use loss::{bellman_targets, discounted_returns, dqn_loss_grad, reinforce_loss_grad, TdLoss};
pub use shift::{
    expectation_jacobian, finite_diff_flat, finite_diff_grad, param_shift_grad,
    param_shift_grad_with, ExpectationJacobian, GradientSet,
};
