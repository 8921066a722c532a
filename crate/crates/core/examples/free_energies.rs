//! Evaluates the three free-energy families at one composition and checks
//! the conjugate round trip and the pressure identity.

use std::sync::Arc;

use mixflow::thermo::{
    ChemicalPotentials, Composition, EntropyLike, FreeEnergyKind, FreeEnergyModel, NewtonOptions,
    SpeciesSystem,
};

fn main() -> mixflow::Result<()> {
    let species = SpeciesSystem::new(vec![1.0, 2.0, 4.0], 1.0)?;
    let models = [
        ("ideal gas", FreeEnergyKind::IdealGas { n_ref: 1.0 }),
        (
            "elastic mixture",
            FreeEnergyKind::ElasticMixture {
                bulk: 2.0,
                v_ref: vec![1.0, 0.8, 0.5],
                volume: Arc::new(EntropyLike),
            },
        ),
        (
            "power law",
            FreeEnergyKind::PowerLaw {
                k: vec![1.0, 0.5, 0.2],
                alpha: vec![2.0, 1.5, 3.0],
                v_ref: vec![1.0, 1.0, 1.0],
            },
        ),
    ];
    let rho = Composition::from_slice(&[0.3, 0.5, 0.2])?;
    for (name, kind) in models {
        let model = FreeEnergyModel::new(species.clone(), kind)?;
        let h = model.free_energy(&rho)?;
        let mu = model.chemical_potentials(&rho)?;
        let p = model.pressure(&rho)?;
        let guess = Composition::new(model.default_guess())?;
        let back = model.invert_gradient(&mu, &guess, NewtonOptions::default())?;
        let h_star = model.conjugate(
            &ChemicalPotentials(mu.0.clone()),
            &guess,
            NewtonOptions::default(),
        )?;
        let eig = model.hessian(&rho)?.symmetric_eigen().eigenvalues.min();
        println!("{name}");
        println!("  h = {h:.6}, p = {p:.6}, h*(mu) = {h_star:.6}");
        println!("  mu = {:?}", mu.values().as_slice());
        println!(
            "  |grad h*(grad h(rho)) - rho| = {:.2e}",
            (back.values() - rho.values()).amax()
        );
        println!("  min eigenvalue of the Hessian = {eig:.4}");
    }
    Ok(())
}
