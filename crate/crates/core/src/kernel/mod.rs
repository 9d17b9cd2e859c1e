//! The operator `K`, its heat kernel and the discrete objects built on the
//! typical locations.

mod antiderivative;
mod heat;
mod pou;

pub use antiderivative::{antiderivative_p, AntiderivativeBounds, AntiderivativeP};
pub use heat::{
    apply_k, cheb_function, cheb_p, cheb_p_all, cheb_p_derivatives, discrete_u, heat_kernel,
    heat_kernel_angles, heat_kernel_dy, heat_kernel_series, heat_kernel_unchecked,
    kernel_bound_check, kernel_grid_csv, lattice_symbol, psi_apply, sobolev_constant,
    translation_invariant_kernel, KernelBoundReport, PsiOperator, FD_STEP, LATTICE_SYMBOL_CONSTANT,
};
pub use pou::{extend_vector, partition_xi, PartitionOfUnity, PLATEAU_FRACTION};
