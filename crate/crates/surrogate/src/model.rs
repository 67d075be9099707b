//! Encode-process-decode surrogates with geometry conditioning, enforced
//! horizontal periodicity, and approximate mass conservation.
//!
//! All architectures share the pointwise encoder and the temporal decoder;
//! the processor is one of the dilated residual network, the UNet (with
//! vertical-only striding so cyclic horizontal shifts commute exactly), or
//! the U-FNO (spectral blocks with an inner UNet branch, optionally
//! alternating with plain spectral blocks).

use crate::error::{ModelError, Result};
use crate::layers::{
    concat_channels, gelu_backward, gelu_forward, split_channels, upsample_vertical,
    upsample_vertical_backward, Conv2d, GroupNorm, GroupNormCache, PadX, TemporalConv,
};
use crate::mass::{frame_oil_mass, mass_correct, MassBudget};
use crate::param::{HasParams, ParamTensor};
use crate::spec::{ArchSpec, ModelSpec, DRN_DILATIONS};
use crate::spectral::SpectralConv2d;
use crate::tensor::Tens;
use crate::TimeBundle;
use oilpore_core::{resample_mask, GeometryMask, SplitMix64};
use rustfft::num_complex::Complex;

fn pad_of(periodic: bool) -> PadX {
    if periodic {
        PadX::Circular
    } else {
        PadX::Zero
    }
}

/// Largest group count <= requested that divides the channel count.
fn groups_for(channels: usize, requested: usize) -> usize {
    (1..=requested.min(channels))
        .rev()
        .find(|g| channels % g == 0)
        .unwrap_or(1)
}

/// Mask conditioning channels per vertical resolution level.
pub struct MaskSet {
    pub levels: Vec<Vec<f32>>,
}

impl MaskSet {
    fn build(mask: &GeometryMask, n_levels: usize) -> Result<Self> {
        let grid = mask.grid();
        let mut levels = vec![mask.fluid_channel()];
        let mut h = grid.height();
        for _ in 1..n_levels {
            h /= 2;
            let coarse = resample_mask(mask, grid.width(), h)?;
            levels.push(coarse.fluid_channel());
        }
        Ok(Self { levels })
    }
}

// ---------------------------------------------------------------------------
// encoder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Encoder {
    conv1: Conv2d,
    conv2: Conv2d,
}

pub struct EncCache {
    x0: Tens,
    a1: Tens,
    z1: Tens,
    a2: Tens,
}

impl Encoder {
    fn new(k: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        Self {
            conv1: Conv2d::pointwise("encoder.conv1", k + 1, hidden, rng),
            conv2: Conv2d::pointwise("encoder.conv2", hidden, hidden, rng),
        }
    }

    pub fn forward(&self, bundle: &Tens, mask_channel: &[f32]) -> (Tens, EncCache) {
        let x0 = bundle.with_extra_channel(mask_channel);
        let a1 = self.conv1.forward(&x0);
        let z1 = gelu_forward(&a1);
        let a2 = self.conv2.forward(&z1);
        let h = gelu_forward(&a2);
        (h, EncCache { x0, a1, z1, a2 })
    }

    fn backward(&mut self, cache: &EncCache, gh: &Tens) -> Tens {
        let ga2 = gelu_backward(&cache.a2, gh);
        let gz1 = self.conv2.backward(&cache.z1, &ga2);
        let ga1 = gelu_backward(&cache.a1, &gz1);
        let gx0 = self.conv1.backward(&cache.x0, &ga1);
        gx0.without_last_channel()
    }
}

impl HasParams for Encoder {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        self.conv1.for_each_param(f);
        self.conv2.for_each_param(f);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        self.conv1.for_each_param_mut(f);
        self.conv2.for_each_param_mut(f);
    }
}

// ---------------------------------------------------------------------------
// helpers for mask conditioning
// ---------------------------------------------------------------------------

fn attach_mask(x: &Tens, mask_channel: &[f32], conditioned: bool) -> Tens {
    if conditioned {
        x.with_extra_channel(mask_channel)
    } else {
        x.clone()
    }
}

fn detach_mask(g: Tens, conditioned: bool) -> Tens {
    if conditioned {
        g.without_last_channel()
    } else {
        g
    }
}

fn add_into(dst: &mut Tens, src: &Tens) {
    debug_assert_eq!(dst.data.len(), src.data.len());
    for (d, s) in dst.data.iter_mut().zip(&src.data) {
        *d += s;
    }
}

// ---------------------------------------------------------------------------
// DRN processor
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct DrnBlock {
    convs: Vec<Conv2d>,
}

struct DrnBlockCache {
    inputs: Vec<Tens>,
    preacts: Vec<Tens>,
}

#[derive(Debug, Clone)]
pub struct DrnProcessor {
    blocks: Vec<DrnBlock>,
    conditioned: bool,
}

pub struct DrnCache {
    blocks: Vec<DrnBlockCache>,
}

impl DrnProcessor {
    fn new(spec: &crate::spec::DrnSpec, hidden: usize, model: &ModelSpec, rng: &mut SplitMix64) -> Self {
        let conditioned = model.flags.enforce_geometry_bc;
        let extra = usize::from(conditioned);
        let pad = pad_of(model.flags.enforce_periodicity);
        let blocks = (0..spec.blocks)
            .map(|b| DrnBlock {
                convs: DRN_DILATIONS
                    .iter()
                    .enumerate()
                    .map(|(l, dilation)| {
                        Conv2d::new(
                            &format!("drn.block{b}.conv{l}"),
                            hidden + extra,
                            hidden,
                            spec.kernel,
                            spec.kernel,
                            *dilation,
                            1,
                            pad,
                            rng,
                        )
                    })
                    .collect(),
            })
            .collect();
        Self { blocks, conditioned }
    }

    fn forward(&self, x: &Tens, masks: &MaskSet) -> (Tens, DrnCache) {
        let mask = &masks.levels[0];
        let mut cur = x.clone();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let residual = cur.clone();
            let mut inputs = Vec::with_capacity(block.convs.len());
            let mut preacts = Vec::with_capacity(block.convs.len());
            for conv in &block.convs {
                let xin = attach_mask(&cur, mask, self.conditioned);
                let a = conv.forward(&xin);
                cur = gelu_forward(&a);
                inputs.push(xin);
                preacts.push(a);
            }
            add_into(&mut cur, &residual);
            caches.push(DrnBlockCache { inputs, preacts });
        }
        (cur, DrnCache { blocks: caches })
    }

    fn backward(&mut self, cache: &DrnCache, g_out: &Tens) -> Tens {
        let mut g = g_out.clone();
        for (block, bcache) in self.blocks.iter_mut().zip(&cache.blocks).rev() {
            let g_residual = g.clone();
            let mut g_chain = g;
            for (conv, (xin, a)) in block
                .convs
                .iter_mut()
                .zip(bcache.inputs.iter().zip(&bcache.preacts))
                .rev()
            {
                let ga = gelu_backward(a, &g_chain);
                g_chain = detach_mask(conv.backward(xin, &ga), self.conditioned);
            }
            add_into(&mut g_chain, &g_residual);
            g = g_chain;
        }
        g
    }
}

impl HasParams for DrnProcessor {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        for block in &self.blocks {
            for conv in &block.convs {
                conv.for_each_param(f);
            }
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        for block in &mut self.blocks {
            for conv in &mut block.convs {
                conv.for_each_param_mut(f);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// UNet processor
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct ResBlock {
    n1: GroupNorm,
    c1: Conv2d,
    n2: GroupNorm,
    c2: Conv2d,
    skip: Option<Conv2d>,
}

struct ResCache {
    x: Tens,
    n1c: GroupNormCache,
    y1: Tens,
    xin1: Tens,
    a1: Tens,
    n2c: GroupNormCache,
    y2: Tens,
    xin2: Tens,
}

impl ResBlock {
    #[allow(clippy::too_many_arguments)]
    fn new(
        name: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        groups: usize,
        conditioned: bool,
        pad: PadX,
        rng: &mut SplitMix64,
    ) -> Self {
        let extra = usize::from(conditioned);
        Self {
            n1: GroupNorm::new(&format!("{name}.norm1"), groups_for(cin, groups), cin),
            c1: Conv2d::new(
                &format!("{name}.conv1"),
                cin + extra,
                cout,
                kernel,
                kernel,
                1,
                1,
                pad,
                rng,
            ),
            n2: GroupNorm::new(&format!("{name}.norm2"), groups_for(cout, groups), cout),
            c2: Conv2d::new(
                &format!("{name}.conv2"),
                cout + extra,
                cout,
                kernel,
                kernel,
                1,
                1,
                pad,
                rng,
            ),
            skip: (cin != cout).then(|| Conv2d::pointwise(&format!("{name}.skip"), cin, cout, rng)),
        }
    }

    fn forward(&self, x: &Tens, mask: &[f32], conditioned: bool) -> (Tens, ResCache) {
        let (y1, n1c) = self.n1.forward(x);
        let g1 = gelu_forward(&y1);
        let xin1 = attach_mask(&g1, mask, conditioned);
        let a1 = self.c1.forward(&xin1);
        let (y2, n2c) = self.n2.forward(&a1);
        let g2 = gelu_forward(&y2);
        let xin2 = attach_mask(&g2, mask, conditioned);
        let mut out = self.c2.forward(&xin2);
        match &self.skip {
            Some(conv) => add_into(&mut out, &conv.forward(x)),
            None => add_into(&mut out, x),
        }
        (
            out,
            ResCache {
                x: x.clone(),
                n1c,
                y1,
                xin1,
                a1,
                n2c,
                y2,
                xin2,
            },
        )
    }

    fn backward(&mut self, cache: &ResCache, g: &Tens, conditioned: bool) -> Tens {
        let g_g2 = detach_mask(self.c2.backward(&cache.xin2, g), conditioned);
        let gy2 = gelu_backward(&cache.y2, &g_g2);
        let ga1 = self.n2.backward(&cache.a1, &cache.n2c, &gy2);
        let g_g1 = detach_mask(self.c1.backward(&cache.xin1, &ga1), conditioned);
        let gy1 = gelu_backward(&cache.y1, &g_g1);
        let mut gx = self.n1.backward(&cache.x, &cache.n1c, &gy1);
        match &mut self.skip {
            Some(conv) => add_into(&mut gx, &conv.backward(&cache.x, g)),
            None => add_into(&mut gx, g),
        }
        gx
    }

    fn visit(&self, f: &mut dyn FnMut(&ParamTensor)) {
        self.n1.for_each_param(f);
        self.c1.for_each_param(f);
        self.n2.for_each_param(f);
        self.c2.for_each_param(f);
        if let Some(conv) = &self.skip {
            conv.for_each_param(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        self.n1.for_each_param_mut(f);
        self.c1.for_each_param_mut(f);
        self.n2.for_each_param_mut(f);
        self.c2.for_each_param_mut(f);
        if let Some(conv) = &mut self.skip {
            conv.for_each_param_mut(f);
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnetProcessor {
    channels: Vec<usize>,
    down_blocks: Vec<Vec<ResBlock>>,
    down_convs: Vec<Conv2d>,
    up_convs: Vec<Conv2d>,
    up_blocks: Vec<Vec<ResBlock>>,
    out_proj: Conv2d,
    conditioned: bool,
}

pub struct UnetCache {
    down_blocks: Vec<Vec<ResCache>>,
    down_inputs: Vec<Tens>,
    down_preacts: Vec<Tens>,
    skips: Vec<Tens>,
    up_inputs: Vec<Tens>,
    up_preacts: Vec<Tens>,
    up_blocks: Vec<Vec<ResCache>>,
    proj_in: Tens,
}

impl UnetProcessor {
    fn new(
        spec: &crate::spec::UnetSpec,
        hidden: usize,
        model: &ModelSpec,
        grid_h: usize,
        rng: &mut SplitMix64,
    ) -> Result<Self> {
        let levels = spec.multipliers.len();
        let bottom_h = grid_h >> (levels - 1);
        if grid_h % (1 << (levels - 1)) != 0 || bottom_h < 8 {
            return Err(ModelError::Config(format!(
                "grid height {grid_h} cannot support {levels} UNet levels (needs \
                 divisibility by {} and a bottleneck of at least 8 rows)",
                1 << (levels - 1)
            )));
        }
        let conditioned = model.flags.enforce_geometry_bc;
        let extra = usize::from(conditioned);
        let pad = pad_of(model.flags.enforce_periodicity);
        let channels: Vec<usize> = spec.multipliers.iter().map(|m| hidden * m).collect();

        let mut down_blocks = Vec::with_capacity(levels);
        for (l, &c) in channels.iter().enumerate() {
            let cin = if l == 0 { hidden } else { channels[l - 1] };
            let mut blocks = Vec::with_capacity(spec.depth);
            for d in 0..spec.depth {
                let bin = if d == 0 { cin } else { c };
                blocks.push(ResBlock::new(
                    &format!("unet.down{l}.res{d}"),
                    bin,
                    c,
                    3,
                    spec.norm_groups,
                    conditioned,
                    pad,
                    rng,
                ));
            }
            down_blocks.push(blocks);
        }
        let down_convs: Vec<Conv2d> = (0..levels - 1)
            .map(|l| {
                Conv2d::new(
                    &format!("unet.down{l}.pool"),
                    channels[l] + extra,
                    channels[l],
                    3,
                    3,
                    1,
                    2,
                    pad,
                    rng,
                )
            })
            .collect();
        let up_convs: Vec<Conv2d> = (0..levels - 1)
            .rev()
            .map(|l| {
                Conv2d::new(
                    &format!("unet.up{l}.unpool"),
                    channels[l + 1] + extra,
                    channels[l + 1],
                    3,
                    3,
                    1,
                    1,
                    pad,
                    rng,
                )
            })
            .collect();
        let mut up_blocks = Vec::with_capacity(levels - 1);
        for l in (0..levels - 1).rev() {
            let mut blocks = Vec::with_capacity(spec.depth);
            for d in 0..spec.depth {
                let bin = if d == 0 {
                    channels[l + 1] + channels[l]
                } else {
                    channels[l]
                };
                blocks.push(ResBlock::new(
                    &format!("unet.up{l}.res{d}"),
                    bin,
                    channels[l],
                    3,
                    spec.norm_groups,
                    conditioned,
                    pad,
                    rng,
                ));
            }
            up_blocks.push(blocks);
        }
        let out_proj = Conv2d::pointwise("unet.out", channels[0], hidden, rng);
        Ok(Self {
            channels,
            down_blocks,
            down_convs,
            up_convs,
            up_blocks,
            out_proj,
            conditioned,
        })
    }

    fn levels(&self) -> usize {
        self.channels.len()
    }

    fn forward(&self, x: &Tens, masks: &MaskSet) -> (Tens, UnetCache) {
        let levels = self.levels();
        let mut cur = x.clone();
        let mut cache = UnetCache {
            down_blocks: Vec::new(),
            down_inputs: Vec::new(),
            down_preacts: Vec::new(),
            skips: Vec::new(),
            up_inputs: Vec::new(),
            up_preacts: Vec::new(),
            up_blocks: Vec::new(),
            proj_in: Tens::zeros(1, 1, 1),
        };
        for l in 0..levels {
            let mask = &masks.levels[l];
            let mut rcaches = Vec::new();
            for block in &self.down_blocks[l] {
                let (out, rc) = block.forward(&cur, mask, self.conditioned);
                cur = out;
                rcaches.push(rc);
            }
            cache.down_blocks.push(rcaches);
            if l < levels - 1 {
                cache.skips.push(cur.clone());
                let xin = attach_mask(&cur, mask, self.conditioned);
                let a = self.down_convs[l].forward(&xin);
                cur = gelu_forward(&a);
                cache.down_inputs.push(xin);
                cache.down_preacts.push(a);
            }
        }
        for (step, l) in (0..levels - 1).rev().enumerate() {
            let mask = &masks.levels[l];
            let up = upsample_vertical(&cur);
            let xin = attach_mask(&up, mask, self.conditioned);
            let a = self.up_convs[step].forward(&xin);
            let activated = gelu_forward(&a);
            cache.up_inputs.push(xin);
            cache.up_preacts.push(a);
            cur = concat_channels(&activated, &cache.skips[l]);
            let mut rcaches = Vec::new();
            for block in &self.up_blocks[step] {
                let (out, rc) = block.forward(&cur, mask, self.conditioned);
                cur = out;
                rcaches.push(rc);
            }
            cache.up_blocks.push(rcaches);
        }
        cache.proj_in = cur.clone();
        let out = self.out_proj.forward(&cur);
        (out, cache)
    }

    fn backward(&mut self, cache: &UnetCache, g_out: &Tens) -> Tens {
        let levels = self.levels();
        let mut g = self.out_proj.backward(&cache.proj_in, g_out);
        let mut skip_grads: Vec<Option<Tens>> = vec![None; levels - 1];
        for (step, l) in (0..levels - 1).rev().enumerate().collect::<Vec<_>>().into_iter().rev() {
            for (block, rc) in self.up_blocks[step]
                .iter_mut()
                .zip(&cache.up_blocks[step])
                .rev()
            {
                g = block.backward(rc, &g, self.conditioned);
            }
            let (g_up_act, g_skip) = split_channels(&g, self.channels[l + 1]);
            skip_grads[l] = Some(g_skip);
            let ga = gelu_backward(&cache.up_preacts[step], &g_up_act);
            let g_upsampled = detach_mask(
                self.up_convs[step].backward(&cache.up_inputs[step], &ga),
                self.conditioned,
            );
            g = upsample_vertical_backward(&g_upsampled);
        }
        for l in (0..levels).rev() {
            if l < levels - 1 {
                let ga = gelu_backward(&cache.down_preacts[l], &g);
                let mut g_pre = detach_mask(
                    self.down_convs[l].backward(&cache.down_inputs[l], &ga),
                    self.conditioned,
                );
                if let Some(gs) = &skip_grads[l] {
                    add_into(&mut g_pre, gs);
                }
                g = g_pre;
            }
            for (block, rc) in self.down_blocks[l]
                .iter_mut()
                .zip(&cache.down_blocks[l])
                .rev()
            {
                g = block.backward(rc, &g, self.conditioned);
            }
        }
        g
    }
}

impl HasParams for UnetProcessor {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        for blocks in &self.down_blocks {
            for block in blocks {
                block.visit(f);
            }
        }
        for conv in &self.down_convs {
            conv.for_each_param(f);
        }
        for conv in &self.up_convs {
            conv.for_each_param(f);
        }
        for blocks in &self.up_blocks {
            for block in blocks {
                block.visit(f);
            }
        }
        self.out_proj.for_each_param(f);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        for blocks in &mut self.down_blocks {
            for block in blocks {
                block.visit_mut(f);
            }
        }
        for conv in &mut self.down_convs {
            conv.for_each_param_mut(f);
        }
        for conv in &mut self.up_convs {
            conv.for_each_param_mut(f);
        }
        for blocks in &mut self.up_blocks {
            for block in blocks {
                block.visit_mut(f);
            }
        }
        self.out_proj.for_each_param_mut(f);
    }
}

// ---------------------------------------------------------------------------
// U-FNO processor
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct InnerUnet {
    downs: Vec<Conv2d>,
    ups: Vec<Conv2d>,
}

struct InnerCache {
    skips: Vec<Tens>,
    down_preacts: Vec<Tens>,
    up_concat_in: Vec<Tens>,
    up_preacts: Vec<Tens>,
}

impl InnerUnet {
    fn new(
        name: &str,
        in_c: usize,
        hidden: usize,
        multipliers: &[usize],
        pad: PadX,
        rng: &mut SplitMix64,
    ) -> Self {
        let mut downs = Vec::with_capacity(multipliers.len());
        let mut prev = in_c;
        for (l, m) in multipliers.iter().enumerate() {
            let c = hidden * m;
            downs.push(Conv2d::new(
                &format!("{name}.down{l}"),
                prev,
                c,
                3,
                3,
                1,
                2,
                pad,
                rng,
            ));
            prev = c;
        }
        let mut ups = Vec::with_capacity(multipliers.len());
        for l in (0..multipliers.len()).rev() {
            let skip_c = if l == 0 { in_c } else { hidden * multipliers[l - 1] };
            let out_c = if l == 0 { hidden } else { hidden * multipliers[l - 1] };
            ups.push(Conv2d::new(
                &format!("{name}.up{l}"),
                prev + skip_c,
                out_c,
                3,
                3,
                1,
                1,
                pad,
                rng,
            ));
            prev = out_c;
        }
        Self { downs, ups }
    }

    fn forward(&self, x: &Tens) -> (Tens, InnerCache) {
        let mut cache = InnerCache {
            skips: Vec::new(),
            down_preacts: Vec::new(),
            up_concat_in: Vec::new(),
            up_preacts: Vec::new(),
        };
        let mut cur = x.clone();
        for conv in &self.downs {
            cache.skips.push(cur.clone());
            let a = conv.forward(&cur);
            cache.down_preacts.push(a.clone());
            cur = gelu_forward(&a);
        }
        for (step, conv) in self.ups.iter().enumerate() {
            let skip = &cache.skips[self.downs.len() - 1 - step];
            let up = upsample_vertical(&cur);
            let xin = concat_channels(&up, skip);
            let a = conv.forward(&xin);
            cache.up_concat_in.push(xin);
            cache.up_preacts.push(a.clone());
            cur = gelu_forward(&a);
        }
        (cur, cache)
    }

    fn backward(&mut self, cache: &InnerCache, g_out: &Tens) -> Tens {
        let mut g = g_out.clone();
        let mut skip_grads: Vec<Option<Tens>> = vec![None; self.downs.len()];
        for (step, conv) in self.ups.iter_mut().enumerate().rev() {
            let ga = gelu_backward(&cache.up_preacts[step], &g);
            let g_in = conv.backward(&cache.up_concat_in[step], &ga);
            let up_c = g_in.c - cache.skips[self.downs.len() - 1 - step].c;
            let (g_up, g_skip) = split_channels(&g_in, up_c);
            skip_grads[self.downs.len() - 1 - step] = Some(g_skip);
            g = upsample_vertical_backward(&g_up);
        }
        for (l, conv) in self.downs.iter_mut().enumerate().rev() {
            let ga = gelu_backward(&cache.down_preacts[l], &g);
            g = conv.backward(&cache.skips[l], &ga);
            if let Some(gs) = &skip_grads[l] {
                add_into(&mut g, gs);
            }
        }
        g
    }

    fn visit(&self, f: &mut dyn FnMut(&ParamTensor)) {
        for conv in &self.downs {
            conv.for_each_param(f);
        }
        for conv in &self.ups {
            conv.for_each_param(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        for conv in &mut self.downs {
            conv.for_each_param_mut(f);
        }
        for conv in &mut self.ups {
            conv.for_each_param_mut(f);
        }
    }
}

#[derive(Debug)]
struct UfnoBlock {
    spectral: SpectralConv2d,
    pointwise: Conv2d,
    inner: Option<InnerUnet>,
}

struct UfnoBlockCache {
    xin: Tens,
    spectra: Vec<Vec<Complex<f64>>>,
    inner: Option<InnerCache>,
    preact: Tens,
}

#[derive(Debug)]
pub struct UfnoProcessor {
    blocks: Vec<UfnoBlock>,
    conditioned: bool,
}

pub struct UfnoCache {
    blocks: Vec<UfnoBlockCache>,
}

impl UfnoProcessor {
    fn new(
        spec: &crate::spec::UfnoSpec,
        hidden: usize,
        model: &ModelSpec,
        grid_h: usize,
        grid_w: usize,
        rng: &mut SplitMix64,
    ) -> Result<Self> {
        let conditioned = model.flags.enforce_geometry_bc;
        let extra = usize::from(conditioned);
        let pad = pad_of(model.flags.enforce_periodicity);
        let inner_levels = spec.unet_multipliers.len();
        if inner_levels > 0 {
            let bottom = grid_h >> inner_levels;
            if grid_h % (1 << inner_levels) != 0 || bottom < 2 {
                return Err(ModelError::Config(format!(
                    "grid height {grid_h} cannot support an inner UNet with {inner_levels} levels"
                )));
            }
        }
        let mut blocks = Vec::with_capacity(spec.layers);
        for l in 0..spec.layers {
            // in the alternating variant, even-indexed blocks are plain
            // spectral layers (the paper interleaves FNO and U-FNO layers)
            let with_inner = !spec.alternate || l % 2 == 1;
            blocks.push(UfnoBlock {
                spectral: SpectralConv2d::new(
                    &format!("ufno.block{l}.spectral"),
                    hidden + extra,
                    hidden,
                    spec.modes,
                    grid_h,
                    grid_w,
                    model.flags.enforce_periodicity,
                    rng,
                )?,
                pointwise: Conv2d::pointwise(
                    &format!("ufno.block{l}.pointwise"),
                    hidden + extra,
                    hidden,
                    rng,
                ),
                inner: with_inner.then(|| {
                    InnerUnet::new(
                        &format!("ufno.block{l}.unet"),
                        hidden + extra,
                        hidden,
                        &spec.unet_multipliers,
                        pad,
                        rng,
                    )
                }),
            });
        }
        Ok(Self { blocks, conditioned })
    }

    fn forward(&self, x: &Tens, masks: &MaskSet) -> (Tens, UfnoCache) {
        let mask = &masks.levels[0];
        let mut cur = x.clone();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let xin = attach_mask(&cur, mask, self.conditioned);
            let (mut sum, spectra) = block.spectral.forward(&xin);
            add_into(&mut sum, &block.pointwise.forward(&xin));
            let inner_cache = block.inner.as_ref().map(|inner| {
                let (branch, ic) = inner.forward(&xin);
                add_into(&mut sum, &branch);
                ic
            });
            cur = gelu_forward(&sum);
            caches.push(UfnoBlockCache {
                xin,
                spectra,
                inner: inner_cache,
                preact: sum,
            });
        }
        (cur, UfnoCache { blocks: caches })
    }

    fn backward(&mut self, cache: &UfnoCache, g_out: &Tens) -> Tens {
        let mut g = g_out.clone();
        for (block, bc) in self.blocks.iter_mut().zip(&cache.blocks).rev() {
            let ga = gelu_backward(&bc.preact, &g);
            let mut gxin = block.spectral.backward(&bc.xin, &bc.spectra, &ga);
            add_into(&mut gxin, &block.pointwise.backward(&bc.xin, &ga));
            if let (Some(inner), Some(ic)) = (&mut block.inner, &bc.inner) {
                add_into(&mut gxin, &inner.backward(ic, &ga));
            }
            g = detach_mask(gxin, self.conditioned);
        }
        g
    }
}

impl HasParams for UfnoProcessor {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        for block in &self.blocks {
            block.spectral.for_each_param(f);
            block.pointwise.for_each_param(f);
            if let Some(inner) = &block.inner {
                inner.visit(f);
            }
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        for block in &mut self.blocks {
            block.spectral.for_each_param_mut(f);
            block.pointwise.for_each_param_mut(f);
            if let Some(inner) = &mut block.inner {
                inner.visit_mut(f);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// decoder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Decoder {
    bridge: Conv2d,
    temporal: TemporalConv,
    proj: TemporalConv,
}

pub struct DecCache {
    o: Tens,
    ab: Tens,
    zb: Tens,
    at: Tens,
    pub y: Tens,
}

impl Decoder {
    fn new(spec: &ModelSpec, rng: &mut SplitMix64) -> Self {
        let d = spec.decoder.features;
        Self {
            bridge: Conv2d::pointwise("decoder.bridge", spec.hidden, spec.k * d, rng),
            temporal: TemporalConv::new(
                "decoder.temporal",
                spec.k,
                d,
                d,
                spec.decoder.temporal_kernel,
                rng,
            ),
            proj: TemporalConv::new("decoder.project", spec.k, d, 1, 1, rng),
        }
    }

    pub fn forward(&self, o: &Tens) -> (Tens, DecCache) {
        let ab = self.bridge.forward(o);
        let zb = gelu_forward(&ab);
        let at = self.temporal.forward(&zb);
        let mut y = self.proj.forward(&at);
        for v in y.data.iter_mut() {
            *v = v.tanh();
        }
        (
            y.clone(),
            DecCache {
                o: o.clone(),
                ab,
                zb,
                at,
                y,
            },
        )
    }

    fn backward(&mut self, cache: &DecCache, gy: &Tens) -> Tens {
        let mut gap = gy.clone();
        for (g, y) in gap.data.iter_mut().zip(&cache.y.data) {
            *g *= 1.0 - y * y;
        }
        let gat = self.proj.backward(&cache.at, &gap);
        let gzb = self.temporal.backward(&cache.zb, &gat);
        let gab = gelu_backward(&cache.ab, &gzb);
        self.bridge.backward(&cache.o, &gab)
    }
}

impl HasParams for Decoder {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        self.bridge.for_each_param(f);
        self.temporal.for_each_param(f);
        self.proj.for_each_param(f);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        self.bridge.for_each_param_mut(f);
        self.temporal.for_each_param_mut(f);
        self.proj.for_each_param_mut(f);
    }
}

// ---------------------------------------------------------------------------
// post-processing (geometry zeroing + approximate mass conservation)
// ---------------------------------------------------------------------------

struct FramePost {
    mass: f64,
    scale: f64,
    dscale_dmass: f64,
    dmhat_dmt: f64,
    corrected: bool,
}

pub struct PostCache {
    frames: Vec<FramePost>,
    /// Raw decoder output (needed to recover pre-clamp values).
    raw: Tens,
    pub skipped_frames: usize,
}

fn postprocess_forward(
    spec: &ModelSpec,
    raw: &Tens,
    mask: &GeometryMask,
    m_t: f64,
) -> Result<(Tens, PostCache)> {
    let hw = raw.h * raw.w;
    let mut out = raw.clone();
    let mut frames = Vec::with_capacity(raw.c);
    let mut skipped = 0usize;
    for t in 0..raw.c {
        let plane = out.plane_mut(t);
        if spec.flags.enforce_geometry_bc {
            for (idx, value) in plane.iter_mut().enumerate() {
                if !mask.is_fluid_idx(idx) {
                    *value = 0.0;
                }
            }
        }
        let mut post = FramePost {
            mass: 0.0,
            scale: 1.0,
            dscale_dmass: 0.0,
            dmhat_dmt: 0.0,
            corrected: false,
        };
        if spec.flags.enforce_mass && m_t > 0.0 {
            let mass = frame_oil_mass(plane, mask);
            if mass > 0.0 {
                let budget = MassBudget {
                    reference: m_t,
                    epsilon: spec.mass_epsilon,
                    offset: t + 1,
                };
                let m_hat = mass_correct(mass, &budget)?;
                let scale = m_hat / mass;
                let ie = (t + 1) as f64 * spec.mass_epsilon;
                let z = (mass / m_t - 1.0) / ie;
                let sech2 = 1.0 - z.tanh() * z.tanh();
                let dmhat_dmass = sech2;
                post.mass = mass;
                post.scale = scale;
                post.dscale_dmass = (dmhat_dmass * mass - m_hat) / (mass * mass);
                post.dmhat_dmt = (1.0 + ie * z.tanh()) - sech2 * (mass / m_t);
                post.corrected = true;
                for (idx, value) in plane.iter_mut().enumerate() {
                    if mask.is_fluid_idx(idx) {
                        let o = (*value as f64 + 1.0) * 0.5;
                        let o_scaled = (o * scale).clamp(0.0, 1.0);
                        *value = (2.0 * o_scaled - 1.0) as f32;
                    }
                }
            } else {
                skipped += 1;
            }
        }
        frames.push(post);
        debug_assert_eq!(plane.len(), hw);
    }
    Ok((
        out,
        PostCache {
            frames,
            raw: raw.clone(),
            skipped_frames: skipped,
        },
    ))
}

/// Gradient of the post-processing step. Returns the gradient with respect
/// to the raw decoder output and d(loss)/d(m_t) for the reference-mass
/// path. Cells pushed outside [0, 1] by the rescale have zero subgradient.
fn postprocess_backward(
    spec: &ModelSpec,
    cache: &PostCache,
    mask: &GeometryMask,
    g_out: &Tens,
) -> (Tens, f64) {
    let mut g_raw = g_out.clone();
    let mut g_mt = 0.0f64;
    for t in 0..g_out.c {
        let post = &cache.frames[t];
        let raw_plane = cache.raw.plane(t);
        let g_plane = g_raw.plane_mut(t);
        if post.corrected {
            // g wrt o' is 2 * g_out; clamp subgradient gates it
            let mut sum_go_o = 0.0f64; // sum over fluid of gated grad * o
            for (idx, g) in g_plane.iter_mut().enumerate() {
                if !mask.is_fluid_idx(idx) {
                    if spec.flags.enforce_geometry_bc {
                        *g = 0.0;
                    }
                    continue;
                }
                let o = (raw_plane[idx] as f64 + 1.0) * 0.5;
                let scaled = o * post.scale;
                let pass = (0.0..=1.0).contains(&scaled);
                let gated = if pass { 2.0 * *g as f64 } else { 0.0 };
                sum_go_o += gated * o;
                // direct term (scale path added below)
                *g = gated as f32;
            }
            let coupling = sum_go_o * post.dscale_dmass;
            for (idx, g) in g_plane.iter_mut().enumerate() {
                if mask.is_fluid_idx(idx) {
                    // d o'/d o = scale (direct) + o dscale/dmass (via mass)
                    let direct = *g as f64 * post.scale;
                    *g = (0.5 * (direct + coupling)) as f32;
                }
            }
            g_mt += sum_go_o * post.dmhat_dmt / post.mass;
        } else {
            // identity map on fluid cells (phi = 2o - 1, o = (raw+1)/2)
            for (idx, g) in g_plane.iter_mut().enumerate() {
                if !mask.is_fluid_idx(idx) && spec.flags.enforce_geometry_bc {
                    *g = 0.0;
                }
            }
        }
    }
    (g_raw, g_mt)
}

// ---------------------------------------------------------------------------
// the full model
// ---------------------------------------------------------------------------

pub enum Processor {
    Drn(DrnProcessor),
    Unet(UnetProcessor),
    Ufno(UfnoProcessor),
}

pub enum ProcCache {
    Drn(DrnCache),
    Unet(UnetCache),
    Ufno(UfnoCache),
}

/// One surrogate: spec echo plus parameterized encoder/processor/decoder,
/// bound to the grid it was built for.
pub struct SurrogateModel {
    pub spec: ModelSpec,
    pub grid_h: usize,
    pub grid_w: usize,
    pub encoder: Encoder,
    pub processor: Processor,
    pub decoder: Decoder,
}

/// Everything needed to run the backward pass of one prediction.
pub struct ForwardPass {
    enc: EncCache,
    proc: ProcCache,
    dec: DecCache,
    post: PostCache,
    pub output: TimeBundle,
    pub skipped_mass_frames: usize,
}

impl SurrogateModel {
    /// Build a model with deterministic parameter initialization.
    pub fn build(spec: &ModelSpec, grid_h: usize, grid_w: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = SplitMix64::new(seed ^ 0x73f0_9a1c_55aa_11ee);
        let encoder = Encoder::new(spec.k, spec.hidden, &mut rng);
        let processor = match &spec.arch {
            ArchSpec::Drn(d) => Processor::Drn(DrnProcessor::new(d, spec.hidden, spec, &mut rng)),
            ArchSpec::Unet(u) => {
                Processor::Unet(UnetProcessor::new(u, spec.hidden, spec, grid_h, &mut rng)?)
            }
            ArchSpec::Ufno(u) => Processor::Ufno(UfnoProcessor::new(
                u, spec.hidden, spec, grid_h, grid_w, &mut rng,
            )?),
        };
        let decoder = Decoder::new(spec, &mut rng);
        Ok(Self {
            spec: spec.clone(),
            grid_h,
            grid_w,
            encoder,
            processor,
            decoder,
        })
    }

    fn mask_levels(&self) -> usize {
        match &self.processor {
            Processor::Unet(p) => p.levels(),
            _ => 1,
        }
    }

    pub fn mask_set(&self, mask: &GeometryMask) -> Result<MaskSet> {
        MaskSet::build(mask, self.mask_levels())
    }

    fn check_dims(&self, bundle: &TimeBundle, mask: &GeometryMask) -> Result<()> {
        if bundle.k != self.spec.k {
            return Err(ModelError::Dimension(format!(
                "bundle length {} does not match model k {}",
                bundle.k, self.spec.k
            )));
        }
        if bundle.h != self.grid_h || bundle.w != self.grid_w {
            return Err(ModelError::Dimension(format!(
                "bundle {}x{} does not match the model grid {}x{}",
                bundle.w, bundle.h, self.grid_w, self.grid_h
            )));
        }
        let grid = mask.grid();
        if grid.height() != self.grid_h || grid.width() != self.grid_w {
            return Err(ModelError::Dimension(format!(
                "mask {}x{} does not match the model grid {}x{}",
                grid.width(),
                grid.height(),
                self.grid_w,
                self.grid_h
            )));
        }
        Ok(())
    }

    /// Full forward pass with caches retained for backward.
    pub fn forward(&self, input: &TimeBundle, mask: &GeometryMask) -> Result<ForwardPass> {
        self.check_dims(input, mask)?;
        let masks = self.mask_set(mask)?;
        let bundle_t = input.as_tensor();
        let (h, enc) = self.encoder.forward(&bundle_t, &masks.levels[0]);
        let (o, proc) = match &self.processor {
            Processor::Drn(p) => {
                let (o, c) = p.forward(&h, &masks);
                (o, ProcCache::Drn(c))
            }
            Processor::Unet(p) => {
                let (o, c) = p.forward(&h, &masks);
                (o, ProcCache::Unet(c))
            }
            Processor::Ufno(p) => {
                let (o, c) = p.forward(&h, &masks);
                (o, ProcCache::Ufno(c))
            }
        };
        let (raw, dec) = self.decoder.forward(&o);
        let m_t = frame_oil_mass(input.last_frame(), mask);
        let (corrected, post) = postprocess_forward(&self.spec, &raw, mask, m_t)?;
        let output = TimeBundle {
            k: self.spec.k,
            h: self.grid_h,
            w: self.grid_w,
            start: input.start + self.spec.k,
            frames: corrected.data,
        };
        let skipped_mass_frames = post.skipped_frames;
        Ok(ForwardPass {
            enc,
            proc,
            dec,
            post,
            output,
            skipped_mass_frames,
        })
    }

    /// Predict the next bundle (inference).
    pub fn predict_bundle(&self, input: &TimeBundle, mask: &GeometryMask) -> Result<TimeBundle> {
        Ok(self.forward(input, mask)?.output)
    }

    /// Backward pass. `g_output` is the loss gradient with respect to the
    /// post-processed prediction; gradients accumulate into the parameters
    /// and the gradient with respect to the input bundle frames (including
    /// the reference-mass path through the last input frame) is returned.
    pub fn backward(
        &mut self,
        pass: &ForwardPass,
        mask: &GeometryMask,
        g_output: &Tens,
    ) -> Tens {
        let (g_raw, g_mt) = postprocess_backward(&self.spec, &pass.post, mask, g_output);
        let g_o = self.decoder.backward(&pass.dec, &g_raw);
        let g_h = match (&mut self.processor, &pass.proc) {
            (Processor::Drn(p), ProcCache::Drn(c)) => p.backward(c, &g_o),
            (Processor::Unet(p), ProcCache::Unet(c)) => p.backward(c, &g_o),
            (Processor::Ufno(p), ProcCache::Ufno(c)) => p.backward(c, &g_o),
            _ => unreachable!("cache/processor mismatch"),
        };
        let mut g_in = self.encoder.backward(&pass.enc, &g_h);
        if g_mt != 0.0 {
            // m_t = sum over fluid cells of (last frame + 1) / 2
            let last = self.spec.k - 1;
            let plane = g_in.plane_mut(last);
            for (idx, g) in plane.iter_mut().enumerate() {
                if mask.is_fluid_idx(idx) {
                    *g += (g_mt * 0.5) as f32;
                }
            }
        }
        g_in
    }

    /// Autoregressive rollout: feed each prediction back as the next input.
    pub fn rollout(
        &self,
        initial: &TimeBundle,
        mask: &GeometryMask,
        n_blocks: usize,
    ) -> Result<Vec<TimeBundle>> {
        let mut blocks = Vec::with_capacity(n_blocks);
        let mut current = initial.clone();
        for _ in 0..n_blocks {
            let next = self.predict_bundle(&current, mask)?;
            blocks.push(next.clone());
            current = next;
        }
        Ok(blocks)
    }
}

impl HasParams for SurrogateModel {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        self.encoder.for_each_param(f);
        match &self.processor {
            Processor::Drn(p) => p.for_each_param(f),
            Processor::Unet(p) => p.for_each_param(f),
            Processor::Ufno(p) => p.for_each_param(f),
        }
        self.decoder.for_each_param(f);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        self.encoder.for_each_param_mut(f);
        match &mut self.processor {
            Processor::Drn(p) => p.for_each_param_mut(f),
            Processor::Unet(p) => p.for_each_param_mut(f),
            Processor::Ufno(p) => p.for_each_param_mut(f),
        }
        self.decoder.for_each_param_mut(f);
    }
}
