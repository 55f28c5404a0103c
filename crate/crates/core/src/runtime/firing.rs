type Inputs<'a> = [Option<&'a [u8]>];
type Outputs<'a> = [Option<&'a mut [u8]>];

/// Channel regions visible to one firing of an actor.
///
/// Regular input and output ports are indexed in declaration order. A port
/// whose rate is 0 for this firing shows up as `None`.
pub struct Firing<'a> {
    inputs: Vec<Option<&'a [u8]>>,
    outputs: Vec<Option<&'a mut [u8]>>,
    index: u64,
    stop: bool,
}

impl<'a> Firing<'a> {
    pub fn new(
        inputs: Vec<Option<&'a [u8]>>,
        outputs: Vec<Option<&'a mut [u8]>>,
        index: u64,
    ) -> Self {
        Self {
            inputs,
            outputs,
            index,
            stop: false,
        }
    }

    /// Zero-based count of previous firings of this actor.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn input(&self, port: usize) -> Option<&[u8]> {
        self.inputs.get(port).copied().flatten()
    }

    pub fn output(&mut self, port: usize) -> Option<&mut [u8]> {
        self.outputs.get_mut(port).and_then(|o| o.as_deref_mut())
    }

    /// Inputs and outputs at once.
    pub fn ports(&mut self) -> (&Inputs<'a>, &mut Outputs<'a>) {
        (&self.inputs, &mut self.outputs)
    }

    /// Ends the stream after this firing. Meant for sources that run out of
    /// input before the configured firing limit.
    pub fn request_stop(&mut self) {
        self.stop = true;
    }

    pub fn stop_requested(&self) -> bool {
        self.stop
    }
}
