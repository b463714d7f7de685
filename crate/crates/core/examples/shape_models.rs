//! Multi-sphere models of the equal-volume shape series: sphere count,
//! radii, bounding sphere and mass properties of each clump.
//!
//! ```text
//! cargo run --example shape_models
//! ```

use msdem::presets;
use msdem::shape::{mass_properties, ShapeDescriptor, ShapeTemplate};

fn main() -> msdem::Result<()> {
    println!("shape,spheres,r_min_mm,r_max_mm,mbs_mm,volume_mm3,mass_mg,I1,I2,I3,connected");
    for kind in presets::SHAPE_KINDS {
        let t = presets::series_template(kind).expect("series shape");
        let template = ShapeTemplate::new(kind, ShapeDescriptor { kind: t.shape, spheres: t.spheres }, 917.0)?;
        let props = mass_properties(&t.shape, 917.0)?;
        let ms = &template.ms;
        println!(
            "{kind},{},{:.3},{:.3},{:.3},{:.2},{:.3},{:.3e},{:.3e},{:.3e},{}",
            ms.len(),
            ms.min_radius() * 1e3,
            ms.max_radius() * 1e3,
            ms.mbs_radius() * 1e3,
            props.volume * 1e9,
            props.mass * 1e6,
            props.inertia_principal.x,
            props.inertia_principal.y,
            props.inertia_principal.z,
            ms.is_connected()
        );
    }
    Ok(())
}
