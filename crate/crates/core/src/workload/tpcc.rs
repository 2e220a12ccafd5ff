use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{OpSpec, StaticOp, StaticWorkload, TxnRequest, TxnTypeInfo, Workload};
use crate::engine::{Key, OpType, TableId};

pub const DISTRICTS: u64 = 10;
pub const CUSTOMERS_PER_DISTRICT: u64 = 100;
pub const ITEMS: u64 = 1000;
pub const STOCK_PER_WAREHOUSE: u64 = 1000;
/// Pre-allocated order slots per district.
pub const ORDER_SLOTS: u64 = 200;
/// Order-line slots reserved per order slot.
pub const LINES_PER_ORDER: u64 = 15;
pub const MIN_LINES: u64 = 5;
pub const MAX_LINES: u64 = 10;
/// Districts served by one delivery.
const DELIVERY_DISTRICTS: u64 = 10;
const STOCK_LEVEL_ITEMS: u64 = 10;
const ORDER_STATUS_LINES: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TpccTable {
    Warehouse,
    District,
    Customer,
    NewOrder,
    Order,
    OrderLine,
    Item,
    Stock,
}

impl TpccTable {
    pub const ALL: [TpccTable; 8] = [
        TpccTable::Warehouse,
        TpccTable::District,
        TpccTable::Customer,
        TpccTable::NewOrder,
        TpccTable::Order,
        TpccTable::OrderLine,
        TpccTable::Item,
        TpccTable::Stock,
    ];

    pub fn id(self) -> TableId {
        TableId(self as u16)
    }

    pub fn name(self) -> &'static str {
        match self {
            TpccTable::Warehouse => "WAREHOUSE",
            TpccTable::District => "DISTRICT",
            TpccTable::Customer => "CUSTOMER",
            TpccTable::NewOrder => "NEW_ORDER",
            TpccTable::Order => "ORDER",
            TpccTable::OrderLine => "ORDER_LINE",
            TpccTable::Item => "ITEM",
            TpccTable::Stock => "STOCK",
        }
    }

    fn rows(self, w: u64) -> u64 {
        match self {
            TpccTable::Warehouse => w,
            TpccTable::District => w * DISTRICTS,
            TpccTable::Customer => w * DISTRICTS * CUSTOMERS_PER_DISTRICT,
            TpccTable::NewOrder | TpccTable::Order => w * DISTRICTS * ORDER_SLOTS,
            TpccTable::OrderLine => w * DISTRICTS * ORDER_SLOTS * LINES_PER_ORDER,
            TpccTable::Item => ITEMS,
            TpccTable::Stock => w * STOCK_PER_WAREHOUSE,
        }
    }
}

/// Transaction types in mix order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TpccType {
    NewOrder = 0,
    Payment = 1,
    Delivery = 2,
    OrderStatus = 3,
    StockLevel = 4,
}

impl TpccType {
    pub const ALL: [TpccType; 5] = [
        TpccType::NewOrder,
        TpccType::Payment,
        TpccType::Delivery,
        TpccType::OrderStatus,
        TpccType::StockLevel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TpccType::NewOrder => "new_order",
            TpccType::Payment => "payment",
            TpccType::Delivery => "delivery",
            TpccType::OrderStatus => "order_status",
            TpccType::StockLevel => "stock_level",
        }
    }

    pub fn learned(self) -> bool {
        matches!(self, TpccType::NewOrder | TpccType::Payment | TpccType::Delivery)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpccConfig {
    pub warehouses: u64,
    /// Percentages per [`TpccType`], summing to 100.
    pub mix: [u32; 5],
}

impl Default for TpccConfig {
    fn default() -> Self {
        TpccConfig {
            warehouses: 1,
            mix: [45, 43, 4, 4, 4],
        }
    }
}

pub struct Tpcc {
    cfg: TpccConfig,
}

fn k(t: TpccTable, row: u64) -> Key {
    Key::new(t as u16, row)
}

fn r(t: TpccTable, row: u64) -> OpSpec {
    OpSpec {
        key: k(t, row),
        op_type: OpType::Read,
    }
}

fn w(t: TpccTable, row: u64) -> OpSpec {
    OpSpec {
        key: k(t, row),
        op_type: OpType::Write,
    }
}

impl Tpcc {
    pub fn new(cfg: TpccConfig) -> Self {
        assert_eq!(cfg.mix.iter().sum::<u32>(), 100, "mix must sum to 100");
        assert!(cfg.warehouses > 0);
        Tpcc { cfg }
    }

    pub fn config(&self) -> &TpccConfig {
        &self.cfg
    }

    fn pick_type(&self, rng: &mut ChaCha8Rng) -> TpccType {
        let mut x = rng.gen_range(0..100u32);
        for t in TpccType::ALL {
            let share = self.cfg.mix[t as usize];
            if x < share {
                return t;
            }
            x -= share;
        }
        TpccType::NewOrder
    }

    fn district(&self, rng: &mut ChaCha8Rng) -> (u64, u64) {
        let wh = rng.gen_range(0..self.cfg.warehouses);
        (wh, wh * DISTRICTS + rng.gen_range(0..DISTRICTS))
    }

    fn customer(d: u64, rng: &mut ChaCha8Rng) -> u64 {
        d * CUSTOMERS_PER_DISTRICT + rng.gen_range(0..CUSTOMERS_PER_DISTRICT)
    }

    fn order_slot(d: u64, rng: &mut ChaCha8Rng) -> u64 {
        d * ORDER_SLOTS + rng.gen_range(0..ORDER_SLOTS)
    }

    /// Operation list of `t`; `lines` is the order-line count for new-order.
    fn ops(&self, t: TpccType, lines: u64, rng: &mut ChaCha8Rng) -> Vec<OpSpec> {
        use TpccTable::*;
        match t {
            TpccType::NewOrder => {
                let (wh, d) = self.district(rng);
                let c = Self::customer(d, rng);
                let slot = Self::order_slot(d, rng);
                let mut ops = vec![
                    r(Warehouse, wh),
                    r(District, d),
                    w(District, d),
                    r(Customer, c),
                    w(Order, slot),
                    w(NewOrder, slot),
                ];
                for (line, item) in sample(rng, ITEMS as usize, lines as usize).into_iter().enumerate() {
                    let item = item as u64;
                    let stock = wh * STOCK_PER_WAREHOUSE + item;
                    ops.extend([
                        r(Item, item),
                        r(Stock, stock),
                        w(Stock, stock),
                        w(OrderLine, slot * LINES_PER_ORDER + line as u64),
                    ]);
                }
                ops
            }
            TpccType::Payment => {
                let (wh, d) = self.district(rng);
                let c = Self::customer(d, rng);
                vec![
                    r(Warehouse, wh),
                    w(Warehouse, wh),
                    r(District, d),
                    w(District, d),
                    r(Customer, c),
                    w(Customer, c),
                ]
            }
            TpccType::Delivery => {
                let wh = rng.gen_range(0..self.cfg.warehouses);
                let mut ops = Vec::with_capacity(4 * DELIVERY_DISTRICTS as usize);
                for dd in 0..DELIVERY_DISTRICTS {
                    let d = wh * DISTRICTS + dd;
                    let slot = Self::order_slot(d, rng);
                    let c = Self::customer(d, rng);
                    ops.extend([r(NewOrder, slot), w(Order, slot), r(Customer, c), w(Customer, c)]);
                }
                ops
            }
            TpccType::OrderStatus => {
                let (_, d) = self.district(rng);
                let c = Self::customer(d, rng);
                let slot = Self::order_slot(d, rng);
                let mut ops = vec![r(Customer, c), r(Order, slot)];
                ops.extend((0..ORDER_STATUS_LINES).map(|l| r(OrderLine, slot * LINES_PER_ORDER + l)));
                ops
            }
            TpccType::StockLevel => {
                let (wh, d) = self.district(rng);
                let mut ops = vec![r(District, d)];
                ops.extend(
                    sample(rng, STOCK_PER_WAREHOUSE as usize, STOCK_LEVEL_ITEMS as usize)
                        .into_iter()
                        .map(|s| r(Stock, wh * STOCK_PER_WAREHOUSE + s as u64)),
                );
                ops
            }
        }
    }
}

impl Workload for Tpcc {
    fn name(&self) -> String {
        "tpcc".into()
    }

    fn schema(&self) -> Vec<(String, u64)> {
        TpccTable::ALL
            .iter()
            .map(|t| (t.name().to_string(), t.rows(self.cfg.warehouses)))
            .collect()
    }

    fn static_ops(&self) -> StaticWorkload {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        StaticWorkload {
            types: TpccType::ALL
                .iter()
                .map(|&t| TxnTypeInfo {
                    name: t.name().into(),
                    ops: self
                        .ops(t, MAX_LINES, &mut rng)
                        .iter()
                        .map(|o| StaticOp {
                            table: o.key.table,
                            op_type: o.op_type,
                        })
                        .collect(),
                    learned: t.learned(),
                })
                .collect(),
        }
    }

    fn generate(&self, rng: &mut ChaCha8Rng) -> TxnRequest {
        let t = self.pick_type(rng);
        let lines = rng.gen_range(MIN_LINES..=MAX_LINES);
        TxnRequest {
            txn_type: t as u16,
            ops: self.ops(t, lines, rng),
            seed: rng.gen(),
        }
    }
}
