//! Battery-charging games on time-expanded energy networks.
//!
//! Prosumers with batteries trade at time-varying prices while the grid
//! operator routes a maximum flow. A strategy counts only if every maximum
//! flow uses it (admissibility). This crate evaluates profiles exactly over
//! rationals, searches grid equilibria and reports the price of anarchy and
//! stability.

pub mod equilibria;
pub mod error;
pub mod flow;
pub mod game;
pub mod instances;
pub mod model;
pub mod pricing;
pub mod quantity;
pub mod verify;

pub use equilibria::{
    best_response, efficiency_ratios, efficiency_ratios_with, enumerate_equilibria, enumerate_equilibria_with,
    is_k_strong, is_k_strong_with, is_nash, strategy_grid, verify_no_ne_construction, CoalitionMode, Equilibrium,
    EquilibriumReport, NoNeCertificate, Ratio, SearchOptions,
};
pub use error::{Error, Result};
pub use flow::{certify_max_flow, max_flow, saturated_in_all_max_flows, Flow, MaxFlow};
pub use game::{
    admissibility, optimal_welfare, profile_from_flow, utilities, welfare, AdmissibilityVerdict, Game, Utility,
};
pub use instances::{load_document, load_instance, paper_instance, save_document, save_instance, PaperInstanceId};
pub use model::{apply_strategy, build_expanded_graph, validate_instance, ExpandedGraph, Instance, StrategyProfile};
pub use pricing::{classify_prices, make_price_profile, PriceClass, PriceProfile, PriceSpec};
pub use quantity::Quantity;
