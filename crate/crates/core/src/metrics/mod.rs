//! Distances, guessing probabilities, couplings and entropy bounds.

mod classical;
mod quantum;

pub use classical::{
    accessible_information_classical, binary_entropy, maximal_coupling, min_entropy_classical,
    pguess_classical, total_variation, total_variation_overlap, Coupling, Distribution,
    JointDistribution,
};
pub use quantum::{
    coupled_measurement, entropy_bounds_check, helstrom_guess, helstrom_povm, mixture_distance,
    optimal_test, pguess_bound_check, trace_distance, CqEnsemble, EntropyReport, GuessMethod,
    GuessReport, MixtureTerm,
};

pub(crate) use classical::h;
