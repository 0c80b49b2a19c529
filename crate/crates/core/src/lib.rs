pub mod annotations;
pub mod archival;
pub mod fixtures;
pub mod guide;
pub mod helpdesk;
pub mod ingest;
pub mod portal;
pub mod records;
pub mod registry;
pub mod search;
pub mod text;
pub mod vocab;
