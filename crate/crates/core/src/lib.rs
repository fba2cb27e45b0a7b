pub mod error;
pub mod geometry;
pub mod scene_graph;
pub mod example_pool;
pub mod clis_l;
pub mod palette;
pub mod clis_i;
pub mod gen_clients;
pub mod seeds;
pub mod toy;
pub mod pipeline;
pub mod export;
