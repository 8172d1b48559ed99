//! Authoring sessions over a workspace and self-contained scene bundles.

mod scene;
mod session;

pub use scene::{build_scene, plot_data, ColorMapping, KnotScene, LayerGeometry, PlotData, SceneBundle, BUNDLE_VERSION};
pub use session::{KnotSummary, Prepared, Rejected, Session, SessionError, UpdateReport};
