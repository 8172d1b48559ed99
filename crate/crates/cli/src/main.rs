use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use urbankit::app::Session;
use urbankit::ingest::{ColumnMap, OsmExtract, Region, DEFAULT_MAX_CELLS};
use urbankit::knot::{Geocoder, OfflineGeocoder};
use urbankit_cli::commands::{self, OsmOptions, ShadowOptions};
use urbankit_cli::fetch::{fetch_overpass, NominatimGeocoder};
use urbankit_cli::server::{serve, AppState};
use urbankit_cli::Failure;

#[derive(Parser)]
#[command(name = "urbankit", version, about = "Grammar-driven urban visual analytics")]
struct Cli {
    /// Workspace directory holding .utk layers.
    #[arg(long, global = true, env = "UTK_WORKSPACE", default_value = ".")]
    workspace: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a specification against the workspace.
    Validate { spec: PathBuf },
    /// Import layers into the workspace.
    #[command(subcommand)]
    Ingest(Ingest),
    /// Accumulate shadow over a time window and save it as a thematic layer.
    Shadow(ShadowArgs),
    /// Evaluate every knot and write `<knot>.json` and `<knot>.csv`.
    Eval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the self-contained scene bundle.
    ExportScene {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the authoring API.
    Serve {
        /// Specification to load at startup.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 8008)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RegionArgs {
    /// lat_min,lon_min,lat_max,lon_max
    #[arg(long)]
    bbox: Option<String>,
    /// lat,lon;lat,lon;...
    #[arg(long)]
    polygon: Option<String>,
    /// Geocoded with Nominatim; needs --fetch.
    #[arg(long)]
    address: Option<String>,
}

#[derive(Subcommand)]
enum Ingest {
    /// Buildings, parks, water and roads from an Overpass JSON extract.
    Osm {
        /// Extract file; omit with --fetch.
        file: Option<PathBuf>,
        /// Query Overpass live instead of reading a file.
        #[arg(long)]
        fetch: bool,
        #[command(flatten)]
        region: RegionArgs,
        /// Comma-separated subset of buildings,parks,water,roads.
        #[arg(long)]
        layers: Option<String>,
        #[arg(long)]
        default_height: Option<f64>,
        #[arg(long)]
        meters_per_level: Option<f64>,
    },
    /// Features of a GeoJSON file as one physical layer.
    Geojson {
        file: PathBuf,
        #[arg(long)]
        name: String,
        /// polygons2d, lines or grid
        #[arg(long)]
        kind: String,
    },
    /// Located values from a CSV file as a thematic layer.
    Csv {
        file: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "lat")]
        lat: String,
        #[arg(long, default_value = "lon")]
        lon: String,
        #[arg(long)]
        height: Option<String>,
        #[arg(long, default_value = "value")]
        value: String,
    },
    /// A regular grid of square cells over a bounding box.
    Grid {
        #[arg(long)]
        name: String,
        /// lat_min,lon_min,lat_max,lon_max
        #[arg(long)]
        bbox: String,
        /// Cell size in meters.
        #[arg(long)]
        cell: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_CELLS)]
        max_cells: usize,
    },
}

#[derive(Args)]
struct ShadowArgs {
    /// Mesh layer (surface samples) or grid layer (cell centres).
    #[arg(long)]
    layer: String,
    /// Extra mesh layers that cast shadow, comma-separated.
    #[arg(long, value_delimiter = ',')]
    occluders: Vec<String>,
    /// Defaults to the workspace origin.
    #[arg(long, allow_hyphen_values = true)]
    lat: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lon: Option<f64>,
    /// Window start (UTC), e.g. 2021-12-21T08:00Z.
    #[arg(long)]
    from: String,
    /// Window end (UTC), exclusive.
    #[arg(long)]
    to: String,
    #[arg(long, default_value = "10m")]
    step: String,
    /// Longest sample triangle edge in meters.
    #[arg(long, default_value_t = 2.0)]
    max_edge: f64,
    /// Output layer name; defaults to shadow_<layer>.
    #[arg(long)]
    name: Option<String>,
}

fn region(args: &RegionArgs) -> Result<Region, Failure> {
    if let Some(b) = &args.bbox {
        return Ok(Region::BoundingBox(commands::parse_bbox(b)?));
    }
    if let Some(p) = &args.polygon {
        return Ok(Region::Polygon(commands::parse_polygon(p)?));
    }
    Ok(Region::Address(args.address.clone().unwrap_or_default()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ws = cli.workspace;
    match cli.command {
        Command::Validate { spec } => {
            for d in commands::validate(&spec, &ws)? {
                eprintln!("{d}");
            }
            println!("{}: ok", spec.display());
        }
        Command::Ingest(Ingest::Osm { file, fetch, region: r, layers, default_height, meters_per_level }) => {
            let geocoder: Box<dyn Geocoder> = if fetch { Box::new(NominatimGeocoder) } else { Box::new(OfflineGeocoder) };
            let region = region(&r)?.resolve(geocoder.as_ref())?;
            let extract = match (&file, fetch) {
                (Some(f), false) => OsmExtract::from_file(f)?,
                (None, true) => fetch_overpass(&region)?,
                _ => return Err(Failure::Invalid("give either an extract file or --fetch".into())),
            };
            let options = OsmOptions { region, layers, default_height, meters_per_level };
            for line in commands::ingest_osm_extract(&extract, options, &ws, geocoder.as_ref())? {
                println!("{line}");
            }
        }
        Command::Ingest(Ingest::Geojson { file, name, kind }) => {
            println!("{}", commands::ingest_geojson_file(&file, &name, commands::parse_kind(&kind)?, &ws)?);
        }
        Command::Ingest(Ingest::Csv { file, name, lat, lon, height, value }) => {
            let columns = ColumnMap { lat, lon, height, value };
            println!("{}", commands::ingest_csv_file(&file, &name, &columns, &ws)?);
        }
        Command::Ingest(Ingest::Grid { name, bbox, cell, max_cells }) => {
            println!("{}", commands::ingest_grid(&name, &commands::parse_bbox(&bbox)?, cell, max_cells, &ws)?);
        }
        Command::Shadow(a) => {
            let options = ShadowOptions {
                layer: a.layer,
                occluders: a.occluders,
                lat: a.lat,
                lon: a.lon,
                from: commands::parse_instant(&a.from)?,
                to: commands::parse_instant(&a.to)?,
                step: commands::parse_step(&a.step)?,
                max_edge: a.max_edge,
                name: a.name,
            };
            println!("{}", commands::shadow(&options, &ws)?);
        }
        Command::Eval { spec, out } => {
            for path in commands::eval(&spec, &ws, &out)? {
                println!("{}", path.display());
            }
        }
        Command::ExportScene { spec, out } => {
            commands::export_scene(&spec, &ws, &out)?;
            println!("{}", out.display());
        }
        Command::Serve { spec, port, host } => {
            let session = match &spec {
                Some(s) => commands::load_session(s, &ws)?,
                None => Session::new(commands::open_workspace(&ws)?),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            runtime
                .block_on(serve(AppState::new(session), SocketAddr::new(host, port)))
                .map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
