//! Vertex R-matrices of cube-shaped Boltzmann weights: the 3D Ising cube and
//! its chiral Potts generalisation, their Grassmann actions, partition
//! functions and integrability checks.

pub mod elliptic;
pub mod grassmann;
pub mod integrability;
pub mod ising;
pub mod partition;
pub mod potts;
pub mod tensor;

pub use elliptic::{baxter_couplings, jacobi, BaxterCouplings, EllipticError, EllipticPoint};
pub use grassmann::{FermionOrder, GrassmannError, GrassmannPoly};
pub use integrability::{ContractionPattern, IntegrabilityError, SpectralAssignment};
pub use ising::{build_r, build_r_complex, build_weight, ComplexCouplings, IsingCouplings, IsingError};
pub use partition::{critical_scan, gaussian_z, CriticalScan, LatticeSpec, PartitionError};
pub use potts::{build_r_p_direct, build_r_p_factorized, ChiralCouplings, PottsError};
pub use tensor::{ComplexMatrix, CubeMatrix, MultiIndex, TensorError, C64};
